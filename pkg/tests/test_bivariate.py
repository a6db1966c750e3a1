import math

import numpy as np
import pytest
from scipy import integrate, stats

from beew.abstract import DensityKind, Region
from beew.bivariate import (
    BEEWParams,
    beew_sample,
    bivariate_hazard,
    branch_logpdf,
    conditional_pdf,
    decompose,
    diagonal_logpdf,
    joint_cdf,
    joint_cdf_branch,
    joint_pdf,
    joint_survival,
    marginal,
    max_cdf,
    max_pdf,
    min_cdf,
    min_pdf,
    mo_copula,
    mo_copula_cdf,
    region_of,
)
from beew.eew import eew_cdf, eew_pdf, eew_quantile
from beew.exceptions import DomainError
from beew.hfamily import (
    Exponential,
    Gompertz,
    LinearFailureRate,
    ModifiedWeibullExtension,
    Weibull,
    WeibullGompertz,
)

E1 = 1 - math.exp(-1)


def params(a1, a2, a3, lam=1.0, fam=None):
    return BEEWParams(alpha1=a1, alpha2=a2, alpha3=a3, lam=lam, fam=fam or Exponential())


def rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def random_points(seed, n=1000, high=4.0):
    g = rng(seed)
    return g.uniform(0.01, high, n), g.uniform(0.01, high, n)


UNIT = params(1.0, 1.0, 1.0)

MASS_CASES = [
    params(1.0, 1.0, 1.0),
    params(0.5, 2.0, 1.5, 0.7),
    params(1.4452, 0.4681, 1.1704, 0.9),
    params(1.0, 1.0, 1.0, fam=LinearFailureRate(1.0, 0.5)),
    params(2.0, 0.5, 0.8, fam=LinearFailureRate(0.3, 2.0)),
    params(1.0, 2.0, 0.5, 1.0, Weibull(2.0)),
    params(0.8, 0.6, 1.2, 0.5, Weibull(1.5)),
    params(1.5, 1.0, 2.0, 0.5, Gompertz(0.5)),
    params(0.7, 1.3, 0.9, 1.0, Gompertz(1.2)),
    params(1.0, 1.5, 0.6, 0.5, WeibullGompertz(1.0, 0.5, 1.0)),
    params(0.9, 0.9, 1.1, 1.0, WeibullGompertz(0.5, 0.3, 1.5)),
    params(1.2, 0.8, 1.0, 0.5, ModifiedWeibullExtension(2.0, 1.5)),
    params(2.0, 1.0, 1.0, 1.0, ModifiedWeibullExtension(1.0, 1.0)),
    params(0.8, 1.2, 2.0, 2.5),
    params(3.0, 1.0, 0.8, 0.3),
    params(1.5, 1.5, 0.9, fam=LinearFailureRate(0.5, 0.5)),
    params(0.9, 2.5, 1.0, fam=LinearFailureRate(2.0, 0.2)),
    params(1.2, 0.9, 3.0, fam=LinearFailureRate(0.8, 1.2)),
    params(1.0, 1.0, 1.0, 1.0, Weibull(3.0)),
    params(2.5, 0.9, 1.0, 2.0, Weibull(1.2)),
    params(0.9, 1.4, 1.8, 0.3, Weibull(2.5)),
    params(1.0, 1.0, 1.0, 2.0, Gompertz(0.2)),
    params(2.2, 0.8, 1.3, 0.4, Gompertz(2.0)),
    params(0.9, 3.0, 1.0, 1.0, Gompertz(0.8)),
    params(1.0, 1.0, 1.0, 1.0, WeibullGompertz(1.0, 1.0, 1.0)),
    params(1.4, 0.9, 2.0, 0.3, WeibullGompertz(0.5, 1.0, 2.0)),
    params(0.8, 1.6, 1.1, 2.0, WeibullGompertz(1.5, 0.2, 0.5)),
    params(1.0, 1.0, 1.0, 1.0, ModifiedWeibullExtension(1.0, 2.0)),
    params(1.3, 2.0, 0.9, 0.5, ModifiedWeibullExtension(3.0, 1.2)),
    params(0.9, 1.1, 1.5, 2.0, ModifiedWeibullExtension(0.5, 1.0)),
]


def test_joint_cdf_examples():
    assert joint_cdf(UNIT, 1.0, 1.0) == pytest.approx(E1 ** 3, rel=1e-14)
    assert joint_cdf(UNIT, 1.0, 1.0) == pytest.approx(0.2525805, abs=1e-7)
    assert joint_cdf(UNIT, 1.0, 2.0) == pytest.approx(E1 * E1 * (1 - math.exp(-2)), rel=1e-14)


def test_joint_cdf_marginal_limit():
    p = params(0.5, 2.0, 1.5, 0.7)
    assert joint_cdf(p, 1.3, 1e3) == pytest.approx(eew_cdf(marginal(p, 1), 1.3), rel=1e-14)


@pytest.mark.parametrize("p", MASS_CASES[::3], ids=repr)
def test_joint_cdf_branch_form(p):
    x1, x2 = random_points(1)
    x1[:50] = x2[:50]
    assert np.max(np.abs(joint_cdf(p, x1, x2) - joint_cdf_branch(p, x1, x2))) < 1e-13


def test_joint_cdf_monotone():
    p = params(0.5, 2.0, 1.5, 0.7)
    grid = np.linspace(0.05, 4.0, 40)
    values = joint_cdf(p, grid[:, None], grid[None, :])
    assert np.all(np.diff(values, axis=0) >= 0)
    assert np.all(np.diff(values, axis=1) >= 0)


def test_joint_pdf_off_diagonal():
    ev = joint_pdf(UNIT, 0.5, 1.5)
    by_hand = 2 * math.exp(-0.5) * (1 - math.exp(-0.5)) * math.exp(-1.5)
    assert ev.value == pytest.approx(by_hand, rel=1e-13)
    assert ev.value == pytest.approx(0.106502, abs=1e-6)
    assert ev.region is Region.X1_LESS
    assert ev.kind is DensityKind.SURFACE
    assert joint_pdf(UNIT, 1.5, 0.5).region is Region.X2_LESS


def test_joint_pdf_diagonal_is_line_density():
    ev = joint_pdf(UNIT, 1.0, 1.0)
    assert ev.value == pytest.approx(math.exp(-1) * E1 ** 2, rel=1e-13)
    assert ev.value == pytest.approx(0.1469959, abs=1e-7)
    assert ev.kind is DensityKind.LINE
    assert ev.region is Region.DIAGONAL
    assert joint_pdf(UNIT, 1.0, 1.0 + 1e-12, tie_eps=1e-9).kind is DensityKind.LINE


def test_joint_pdf_domain():
    with pytest.raises(DomainError):
        joint_pdf(UNIT, 0.0, 1.0)


def test_region_of():
    assert list(region_of([1.0, 1.0, 3.0], [1.0, 2.0, 2.0])) == [0, 1, 2]
    assert region_of(1.0, 1.0000001, 1e-6) == Region.DIAGONAL
    assert region_of(1.0, 1.0000001) == Region.X1_LESS


@pytest.mark.parametrize("p", MASS_CASES, ids=repr)
def test_component_masses(p):
    s = p.total_alpha

    def f1(x2, x1):
        return math.exp(branch_logpdf(p, x1, x2, Region.X1_LESS))

    def f2(x2, x1):
        return math.exp(branch_logpdf(p, x1, x2, Region.X2_LESS))

    # beyond upper, max(X1, X2) has probability below 1e-12
    upper = float(eew_quantile(p.component(s), 1 - 1e-12))
    m1, _ = integrate.dblquad(f1, 0, upper, lambda x1: x1, lambda x1: upper, epsabs=1e-10)
    m2, _ = integrate.dblquad(f2, 0, upper, lambda x1: 0, lambda x1: x1, epsabs=1e-10)
    m0, _ = integrate.quad(lambda x: math.exp(diagonal_logpdf(p, x)), 0, upper, epsabs=1e-12)
    assert m1 == pytest.approx(p.alpha2 / s, abs=1e-6)
    assert m2 == pytest.approx(p.alpha1 / s, abs=1e-6)
    assert m0 == pytest.approx(p.alpha3 / s, abs=1e-6)
    assert m0 + m1 + m2 == pytest.approx(1.0, abs=1e-6)


def test_marginals():
    assert marginal(UNIT, 1).alpha == 2.0
    assert marginal(params(0.3, 0.7, 1.1), 2).alpha == pytest.approx(1.8)
    assert marginal(params(0.3, 0.7, 1e-12), 1).alpha == pytest.approx(0.3)
    with pytest.raises(DomainError):
        marginal(UNIT, 3)


def test_conditional_atom():
    p = params(1.0, 2.0, 1.5, 0.7)
    ev = conditional_pdf(p, 1, 1.2, 1.2)
    expected = 1.5 / (2.0 + 1.5) * (1 - math.exp(-0.7 * 1.2)) ** 1.0
    assert ev.kind is DensityKind.ATOM
    assert ev.value == pytest.approx(expected, rel=1e-13)


def test_conditional_independent_of_xj_below():
    # xj < xi: the law of X_i is EEW(alpha_i) whatever xj
    for xj in (0.2, 0.5, 0.9):
        ev = conditional_pdf(UNIT, 1, 1.3, xj)
        assert ev.kind is DensityKind.CONDITIONAL
        assert ev.value == pytest.approx(eew_pdf(UNIT.component(1.0), 1.3), rel=1e-12)


@pytest.mark.parametrize("p", [UNIT, params(0.5, 2.0, 1.5, 0.7), params(1, 2, 0.5, 0.5, Weibull(2))])
@pytest.mark.parametrize("i", [1, 2])
def test_conditional_law_has_unit_mass(p, i):
    xj = 0.9
    below, _ = integrate.quad(lambda x: conditional_pdf(p, i, x, xj).value, 0, xj, epsabs=1e-11)
    above, _ = integrate.quad(lambda x: conditional_pdf(p, i, x, xj).value, xj, np.inf, epsabs=1e-11)
    atom = conditional_pdf(p, i, xj, xj).value
    assert below + above + atom == pytest.approx(1.0, abs=1e-6)


def test_conditional_underflow():
    with pytest.raises(DomainError):
        conditional_pdf(params(1.0, 1.0, 1.0, fam=Gompertz(1.0)), 1, 1.0, 1000.0)


def test_survival():
    assert joint_survival(UNIT, 1e-12, 1e-12) == pytest.approx(1.0, abs=1e-10)
    assert joint_survival(UNIT, 60.0, 60.0) == pytest.approx(0.0, abs=1e-20)
    expected = 1 - 2 * E1 ** 2 + E1 ** 3
    assert joint_survival(UNIT, 1.0, 1.0) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(0.4534277, abs=1e-7)


def test_survival_monte_carlo():
    xy = beew_sample(UNIT, rng(21), 100_000)
    share = np.mean((xy[:, 0] > 1.0) & (xy[:, 1] > 1.0))
    assert share == pytest.approx(joint_survival(UNIT, 1.0, 1.0), abs=4 * math.sqrt(0.25 / 1e5))


def test_hazard():
    p = params(0.5, 2.0, 1.5, 0.7)
    h = bivariate_hazard(p, 0.8, 1.6)
    assert h.value == pytest.approx(joint_pdf(p, 0.8, 1.6).value / joint_survival(p, 0.8, 1.6))
    d = bivariate_hazard(p, 1.1, 1.1)
    assert d.kind is DensityKind.LINE
    assert d.value == pytest.approx(joint_pdf(p, 1.1, 1.1).value / joint_survival(p, 1.1, 1.1))


def test_hazard_independence_limit():
    p = params(1.0, 1.0, 1e-10)
    assert bivariate_hazard(p, 1.0, 1.5).value == pytest.approx(1.0, rel=1e-6)


def test_hazard_underflow():
    with pytest.raises(DomainError):
        bivariate_hazard(UNIT, 60.0, 61.0)


def test_decompose_weights():
    d = decompose(UNIT)
    assert d.w_sing == pytest.approx(1 / 3)
    d = decompose(params(2.0, 1.0, 1.0))
    assert d.w_sing == 0.25
    assert d.w_abs == 0.75


@pytest.mark.parametrize("p", MASS_CASES[:6], ids=repr)
def test_decomposition_recomposes(p):
    x1, x2 = random_points(2)
    d = decompose(p)
    recomposed = d.w_abs * d.cdf_abs(x1, x2) + d.w_sing * d.cdf_sing(x1, x2)
    assert np.max(np.abs(recomposed - joint_cdf(p, x1, x2))) < 1e-12


def test_decomposition_densities():
    p = params(0.5, 2.0, 1.5, 0.7)
    d = decompose(p)
    assert d.pdf_abs(1.0, 1.0) == 0.0
    assert d.w_abs * d.pdf_abs(0.5, 1.5) == pytest.approx(joint_pdf(p, 0.5, 1.5).value)
    assert d.w_sing * d.pdf_sing(1.0) == pytest.approx(joint_pdf(p, 1.0, 1.0).value)


@pytest.mark.parametrize("p", MASS_CASES, ids=repr)
def test_copula_identity(p):
    x1, x2 = random_points(3)
    assert np.max(np.abs(mo_copula_cdf(p, x1, x2) - joint_cdf(p, x1, x2))) < 1e-12


def test_copula_limits():
    u1, u2 = np.array([0.2, 0.5, 0.9]), np.array([0.7, 0.4, 0.95])
    assert mo_copula(u1, u2, 0.0, 0.0) == pytest.approx(u1 * u2)
    assert mo_copula(u1, u2, 1.0, 1.0) == pytest.approx(np.minimum(u1, u2))


@pytest.mark.parametrize("p", MASS_CASES, ids=repr)
def test_max_min_identities(p):
    t = random_points(4)[0]
    assert np.max(np.abs(max_cdf(p, t) - eew_cdf(p.component(p.total_alpha), t))) < 1e-12
    assert np.max(np.abs(max_cdf(p, t) - joint_cdf(p, t, t))) < 1e-12
    identity = eew_cdf(marginal(p, 1), t) + eew_cdf(marginal(p, 2), t) - joint_cdf(p, t, t)
    assert np.max(np.abs(min_cdf(p, t) - identity)) < 1e-12


def test_min_cdf_example():
    assert min_cdf(UNIT, 1.0) == pytest.approx(2 * E1 ** 2 - E1 ** 3, rel=1e-13)
    assert min_cdf(UNIT, 1.0) == pytest.approx(0.5465723, abs=1e-7)


def test_max_min_densities_integrate():
    p = params(0.5, 2.0, 1.5, 0.7)
    assert integrate.quad(lambda y: max_pdf(p, y), 0, 2.0)[0] == pytest.approx(max_cdf(p, 2.0))
    assert integrate.quad(lambda t: min_pdf(p, t), 0, 2.0)[0] == pytest.approx(min_cdf(p, 2.0))


def test_sample_shape_and_ties():
    p = params(1.0, 1.0, 2.0)
    n = 100_000
    xy = beew_sample(p, rng(5), n)
    assert xy.shape == (n, 2)
    assert np.all(xy > 0)
    ties = np.mean(xy[:, 0] == xy[:, 1])
    assert abs(ties - 0.5) < 3 * math.sqrt(0.25 / n)
    assert beew_sample(p, rng(5), 0).shape == (0, 2)


@pytest.mark.parametrize(
    "p",
    [
        params(1.5, 0.5, 1.2, 0.04),
        params(1.0, 1.5, 0.8, fam=LinearFailureRate(0.5, 1.0)),
        params(1.0, 2.0, 0.5, 1.0, Weibull(2.0)),
        params(0.7, 1.3, 0.9, 1.0, Gompertz(1.2)),
        params(0.9, 0.9, 1.1, 1.0, WeibullGompertz(0.5, 0.3, 1.5)),
        params(1.2, 0.8, 1.0, 0.5, ModifiedWeibullExtension(2.0, 1.5)),
    ],
    ids=repr,
)
def test_sample_marginals_and_max(p):
    n = 100_000
    xy = beew_sample(p, rng(6), n)
    crit = 1.63 / math.sqrt(n)
    assert stats.kstest(xy[:, 0], lambda x: eew_cdf(marginal(p, 1), x)).statistic < crit
    assert stats.kstest(xy[:, 1], lambda x: eew_cdf(marginal(p, 2), x)).statistic < crit
    assert stats.kstest(xy.max(axis=1), lambda x: max_cdf(p, x)).statistic < crit


def test_sample_rectangle_probability():
    p = params(0.5, 2.0, 1.5, 0.7)
    xy = beew_sample(p, rng(8), 100_000)
    a1, b1, a2, b2 = 0.5, 2.0, 1.0, 3.0
    inside = np.mean((xy[:, 0] > a1) & (xy[:, 0] <= b1) & (xy[:, 1] > a2) & (xy[:, 1] <= b2))
    four_term = (
        joint_cdf(p, b1, b2) - joint_cdf(p, a1, b2) - joint_cdf(p, b1, a2) + joint_cdf(p, a1, a2)
    )
    assert four_term >= 0
    assert inside == pytest.approx(four_term, abs=4 * math.sqrt(0.25 / 1e5))


def test_sample_is_reproducible():
    p = params(1.5, 0.5, 1.2, 0.04)
    assert np.array_equal(beew_sample(p, rng(7), 100), beew_sample(p, rng(7), 100))


def test_params_model():
    p = params(1.0, 2.0, 3.0, 0.5, Weibull(2.0))
    assert p.k == 5
    assert p.free_names == ["alpha1", "alpha2", "alpha3", "lambda", "beta"]
    assert p.with_free(p.free_values()) == p
    assert p.swapped().alpha1 == 2.0 and p.swapped().alpha2 == 1.0
    assert BEEWParams.from_dict("weib", p.to_dict()) == p
    lfr = BEEWParams.from_dict(
        "lfr", {"alpha1": 1, "alpha2": 1, "alpha3": 1, "beta": 0.5, "gamma": 0.1}
    )
    assert lfr.lam == 1.0 and lfr.k == 5
    with pytest.raises(ValueError):
        params(1.0, 1.0, 1.0, 2.0, LinearFailureRate(0.5, 0.1))
    with pytest.raises(ValueError):
        params(1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        BEEWParams.from_dict("weib", {"alpha1": 1, "alpha2": 1, "alpha3": 1, "lambda": 1})
