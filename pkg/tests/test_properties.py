"""Property-based checks of the core numerical invariants."""

import numpy as np
from hypothesis import given, settings, strategies as st

from wavegplm import (
    SUPPORTED_FILTERS,
    dwt,
    idwt,
    make_family,
    make_filter,
    rmise,
    soft_threshold,
    universal_lambda,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)


def signals(max_log2=6):
    return st.integers(min_value=2, max_value=max_log2).flatmap(
        lambda J: st.lists(finite_floats, min_size=1 << J, max_size=1 << J)
    )


@given(x=signals(), name=st.sampled_from(SUPPORTED_FILTERS),
       data=st.data())
@settings(max_examples=60, deadline=None)
def test_dwt_round_trip_and_isometry(x, name, data):
    x = np.array(x)
    J = int(np.log2(x.size))
    j0 = data.draw(st.integers(min_value=0, max_value=J))
    filt = make_filter(name)
    coeffs = dwt(x, filt, j0)
    scale = max(1.0, float(np.max(np.abs(x))))
    assert np.max(np.abs(idwt(coeffs, filt) - x)) < 1e-8 * scale
    assert abs(np.linalg.norm(coeffs.values) - np.linalg.norm(x)) < 1e-8 * scale


@given(x=st.lists(finite_floats, min_size=1, max_size=50),
       lam=st.floats(min_value=0.0, max_value=1e6, allow_nan=False))
@settings(max_examples=100, deadline=None)
def test_soft_threshold_contraction(x, lam):
    x = np.array(x)
    out = soft_threshold(x, lam)
    # shrinks toward zero, never flips sign, 1-Lipschitz
    assert np.all(np.abs(out) <= np.abs(x) + 1e-12)
    assert np.all(out * x >= 0.0)
    assert np.all(np.abs(out - x) <= lam + 1e-9 * np.maximum(1.0, np.abs(x)))


@given(f=st.lists(finite_floats, min_size=8, max_size=8),
       g=st.lists(finite_floats, min_size=8, max_size=8),
       h=st.lists(finite_floats, min_size=8, max_size=8))
@settings(max_examples=100, deadline=None)
def test_rmise_triangle_inequality(f, g, h):
    f, g, h = map(np.array, (f, g, h))
    assert rmise(f, h) <= rmise(f, g) + rmise(g, h) + 1e-6 * (
        1.0 + rmise(f, g) + rmise(g, h)
    )
    assert rmise(f, g) == rmise(g, f)
    assert rmise(f, f) == 0.0


@given(n_log2=st.integers(min_value=1, max_value=20),
       m=st.integers(min_value=1, max_value=500))
@settings(max_examples=60, deadline=None)
def test_universal_lambda_monotone_in_n(n_log2, m):
    n = 1 << n_log2
    for kind, kw in (("gaussian", {}), ("binomial", {"m": m}), ("poisson", {})):
        fam = make_family(kind, **kw)
        assert universal_lambda(fam, 2 * n) > universal_lambda(fam, n)


@given(eta=st.lists(st.floats(min_value=-20, max_value=20, allow_nan=False),
                    min_size=1, max_size=30),
       m=st.integers(min_value=1, max_value=200))
@settings(max_examples=100, deadline=None)
def test_family_mean_in_domain_and_variance_positive(eta, m):
    eta = np.array(eta)
    for fam in (make_family("binomial", m=m), make_family("poisson")):
        mu = fam.mean(eta)
        assert np.all(fam.b_ddot(eta) > 0.0)
        if fam.kind == "binomial":
            assert np.all((mu > 0.0) & (mu < 1.0))
        else:
            assert np.all(mu > 0.0)
        # link inverts the mean on its domain
        np.testing.assert_allclose(fam.link(mu), eta, atol=1e-8)
