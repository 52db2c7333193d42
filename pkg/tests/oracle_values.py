"""Frozen high-precision reference values for the test suite.

Generated by make_oracle_values.py; do not edit by hand.
"""

LOG_PMF = {
    (2, 2): -1.3068528194400546,
    (15, 15): -2.2785183673077407,
    (1, 0): -1.0,
    (5, 2): -2.4742713556917444,
    (15, 0): -15.0,
    (50, 40): -3.839719497631553,
    (200, 250): -9.465890153843791,
    (0.5, 3): -4.371201010907891,
}

LOG_SURVIVAL_UPPER = {
    (1, 2): -1.3308932682040546,
    (15, 30): -7.778953942106838,
    (4, 25): -27.180382674004797,
    (4, 8): -2.9733131547522826,
    (9, 9): -0.6081676409456592,
    (200, 290): -20.36062881884308,
}

LOG_SURVIVAL_LOWER = {
    (15, 3): -8.46186017623233,
    (1, 0): -1.0,
    (200, 150): -8.937591520848247,
    (50, 20): -13.604288002717263,
}

TWO_SIDED_TAIL = {
    (2, 0): 0.7293294335267746,
    (4, 10): 1.569313781435315e-12,
    (15, 1.5): 0.15282457073087,
    (1, 2): 0.01898815687615381,
}

TWO_SIDED_PVALUE = {
    (1, 0): 0.6321205588285577,
    (1, 3): 0.08030139707139419,
    (1, 6): 0.000594184817581693,
    (15, 30): 0.0004187555706481888,
    (15, 20): 0.24324562656153992,
    (4, 9): 0.021363434487984164,
}

ONE_SIDED_PVALUE = {
    (1, 0): 1.0,
    (15, 20): 0.12478121503252482,
    (2, 3): 0.32332358381693654,
}

PVALUE_NULL_CDF = {
    (1, 0.5): 0.08030139707139419,
    (15, 0.05): 0.027096474009537727,
    (4, 0.3): 0.20225217284624458,
    (2, 1.0): 1.0,
}

BERRY_GAP = {
    1: 0.23575888234288464,
    100: 0.02656219852999847,
}

MODERATE_RATIO = {
    100: -0.667053827737172,
    1000: -0.5556742508782275,
    10000: -0.5159560630885937,
    100000: -0.5029155576181797,
}

G2_AT_4_OVER_2 = 5.545177444479562

TUKEY_EXAMPLE = 4.824181513244218

BONFERRONI_EXAMPLE = 7.428320146285941

FISHER_EXAMPLE = 15.773990583346047

LRT_LOG_EXAMPLE = 0.8675616609660544

HCZ_N3_K0 = 0.7293294335267746

HCZ_N3_SIGMA0 = 0.592224032754866

HC1_N3_MAX_VARIANCE = 0.7234952991336914

HCP_444_T_LO = 0.45297291852313915

HCP_444_T_HI = 0.8046331851868355

HCP_444_CANDIDATES = [0.45297291852313915]

HCP_444_STAT_AT_MEAN = -1.5761310787610159

HCP_444_STAT_ONE_UP = -0.41628905560740825

HCP_444_ARGMAX_ONE_UP = 0.45297291852313915

HCP_124_WINDOW_EMPTY = True

HCP_15X5_STAT = 0.8169673090272979

HCP_15X5_ARGMAX = 0.24324562656153992

HCP_15X5_N_CANDIDATES = 2

SPARSE_BOUNDARY_09 = 0.46754446796632415

MAX_BOUNDARY_06 = 0.13508893593264826
