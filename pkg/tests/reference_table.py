"""Published three-decimal reference values for the ergodic rate-loss grid.

Keyed by (per-user antenna counts, base antenna count); values in bits/s/Hz.
Grid cells not listed here are infeasible (more terminal than base antennas).
"""

REFERENCE_RATE_LOSS = {
    ((1, 1), 2): 1.443,
    ((1, 1), 3): 0.721,
    ((1, 1), 4): 0.481,
    ((1, 1), 5): 0.361,
    ((1, 1), 6): 0.289,
    ((1, 1, 1), 3): 3.607,
    ((1, 1, 1), 4): 1.924,
    ((1, 1, 1), 5): 1.322,
    ((1, 1, 1), 6): 1.010,
    ((1, 1, 1, 1), 4): 6.252,
    ((1, 1, 1, 1), 5): 3.487,
    ((1, 1, 1, 1), 6): 2.453,
    ((1, 1, 1, 1, 1), 5): 9.257,
    ((1, 1, 1, 1, 1), 6): 5.338,
    ((1, 1, 1, 1, 1, 1), 6): 12.551,
    ((2, 2), 4): 3.366,
    ((2, 2), 5): 2.044,
    ((2, 2), 6): 1.491,
    ((3, 3), 6): 5.338,
    ((2, 2, 2), 6): 8.223,
    ((1, 2), 3): 2.164,
    ((1, 2), 4): 1.202,
    ((1, 2), 5): 0.842,
    ((1, 2), 6): 0.649,
    ((1, 3), 4): 2.645,
    ((1, 3), 5): 1.563,
    ((1, 3), 6): 1.130,
    ((1, 4), 5): 3.006,
    ((1, 4), 6): 1.851,
    ((2, 3), 5): 4.208,
    ((2, 3), 6): 2.693,
    ((2, 4), 6): 4.857,
}
