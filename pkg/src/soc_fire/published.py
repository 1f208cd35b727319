"""Published Florida values (mean yearly fire counts per class and the fits derived from them).

Years were split into five groups by prescribed-burn acreage. Only the class
means are printed, so the per-group median acreages are not available here.
"""

FLORIDA_QUINTILE_MEANS = {
    1: {"A": 1145.17, "B": 2572.67, "C": 795.83, "D": 109.50, "E": 61.83, "F": 23.17, "G": 10.50},
    2: {"A": 680.00, "B": 1621.60, "C": 449.60, "D": 46.80, "E": 20.40, "F": 7.20, "G": 1.20},
    3: {"A": 986.60, "B": 2381.20, "C": 734.40, "D": 97.20, "E": 41.60, "F": 13.80, "G": 4.40},
    4: {"A": 764.80, "B": 1964.40, "C": 592.80, "D": 73.80, "E": 30.60, "F": 10.20, "G": 2.20},
    5: {"A": 534.00, "B": 1392.50, "C": 357.50, "D": 36.83, "E": 17.33, "F": 5.33, "G": 2.33},
}

QUINTILE_LABELS = {c: f"Quintile {c}" for c in FLORIDA_QUINTILE_MEANS}

# per-quintile line fits: slope, slope standard error, two-sided p, R^2
FLORIDA_FITS = {
    1: {"slope": -0.8060, "se_slope": 0.0714, "p": 0.00035, "r_squared": 0.9696},
    2: {"slope": -1.0139, "se_slope": 0.1034, "p": 0.00061, "r_squared": 0.9601},
    3: {"slope": -0.9152, "se_slope": 0.0769, "p": 0.00029, "r_squared": 0.9726},
    4: {"slope": -0.9687, "se_slope": 0.0904, "p": 0.00043, "r_squared": 0.9663},
    5: {"slope": -0.9448, "se_slope": 0.0803, "p": 0.00030, "r_squared": 0.9719},
}

# one-sided p-values for pairwise slope equality, df = 8
FLORIDA_PAIRWISE_P = {
    (1, 2): 0.0683, (1, 3): 0.1641, (1, 4): 0.0978, (1, 5): 0.1163,
    (2, 3): 0.2329, (2, 4): 0.3754, (2, 5): 0.3061,
    (3, 4): 0.3321, (3, 5): 0.3984,
    (4, 5): 0.4241,
}

# Values that need the raw yearly records; checked only when such data is supplied.
SLOPES_VS_BURN = {"slope": -0.2206, "p": 0.09, "excluded": (2,)}
PERIODS = ((1981, 1992), (1993, 2005), (2006, 2019))
PERIOD_PRESCRIBED_P = 0.0007  # period II vs III prescribed acreage
OTHER_STATE_SLOPES = {"Georgia": -1.42, "Northern California": -0.73, "Southern California": -0.75}

TOLERANCES = {"slope": 0.01, "se_slope": 0.003, "r_squared": 0.005, "pairwise_p": 0.003}
