import math

import pytest
from hypothesis import given, strategies as st

from revshoot.system import (
    ORIGIN,
    NonlinearitySpec,
    Params,
    State,
    chi_residual,
    eval_F,
    eval_f,
    hamiltonian,
    reversal,
    vector_field,
)

SECH = NonlinearitySpec(((3, 11.0), (5, -12.0)))
SECH2 = NonlinearitySpec(((2, 32.5), (3, -40.0)))

finite = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
states = st.builds(State, finite, finite, finite, finite)


class TestNonlinearitySpec:
    def test_degree_below_two_rejected(self):
        with pytest.raises(ValueError, match="linearization"):
            NonlinearitySpec(((1, 2.0),))

    def test_degrees_must_increase(self):
        with pytest.raises(ValueError):
            NonlinearitySpec(((3, 1.0), (3, 2.0)))
        with pytest.raises(ValueError):
            NonlinearitySpec(((5, 1.0), (3, 2.0)))

    def test_empty_terms_mean_linear_model(self):
        zero = NonlinearitySpec(())
        assert eval_f(zero, 0.7, 4.0) == 0.0
        assert eval_F(zero, 0.7, 4.0) == 0.0

    def test_linear_coefficient_is_zero(self):
        assert SECH.linear_coefficient() == 0.0
        assert SECH2.linear_coefficient() == 0.0

    def test_json_round_trip(self):
        for spec in (SECH, SECH2):
            assert NonlinearitySpec.from_json_dict(spec.to_json_dict()) == spec

    def test_json_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            NonlinearitySpec.from_json_dict({"terms": [], "extra": 1})
        with pytest.raises(ValueError):
            NonlinearitySpec.from_json_dict(
                {"terms": [{"degree": 2, "coeff": 1.0, "x": 0}]}
            )


class TestPolynomials:
    # hand-evaluated points with float-exact arithmetic
    @pytest.mark.parametrize(
        "spec, u, b, expected",
        [
            (SECH, 1.0, 1.0, -1.0),  # 11 - 12
            (SECH, 0.0, 1.0, 0.0),
            (SECH, 1.0, 0.0, 0.0),
            (SECH, 0.5, 2.0, 2.0),  # 2*(11/8 - 12/32)
            (SECH2, 0.5, 3.0, 9.375),  # 3*(32.5/4 - 40/8)
            (SECH2, 1.0, 3.0, -22.5),  # 3*(32.5 - 40)
        ],
    )
    def test_eval_f_frozen(self, spec, u, b, expected):
        assert eval_f(spec, u, b) == expected

    def test_eval_F_frozen(self):
        # F_sech(1, 1) = 11/4 - 12/6 = 0.75, exact in floats
        assert eval_F(SECH, 1.0, 1.0) == 0.75
        # F_sech2(1, 3) = 3*(32.5/3 - 10) = 2.5 up to one division rounding
        assert eval_F(SECH2, 1.0, 3.0) == pytest.approx(2.5, abs=1e-13)
        assert eval_F(SECH, 0.0, 5.0) == 0.0

    @given(u=st.floats(min_value=-1.5, max_value=1.5), b=st.floats(min_value=-5, max_value=5))
    def test_eval_F_derivative_matches_eval_f(self, u, b):
        h = 1e-5
        for spec in (SECH, SECH2):
            diff = (eval_F(spec, u + h, b) - eval_F(spec, u - h, b)) / (2.0 * h)
            f = eval_f(spec, u, b)
            assert abs(diff - f) <= 1e-5 * (1.0 + abs(f))


class TestField:
    def test_vector_field_frozen(self):
        # a=0 kills the -a v coupling; f(1, 3) = -22.5 for the quadratic family
        out = vector_field(State(1.0, 0.0, 0.0, 0.0), Params(0.0, 3.0, SECH2))
        assert out == State(0.0, 0.0, -23.5, 0.0)
        out = vector_field(State(0.0, 1.0, 0.0, 0.0), Params(2.0, 0.0, SECH))
        assert out == State(1.0, 0.0, 0.0, -2.0)

    def test_origin_is_equilibrium(self):
        assert vector_field(ORIGIN, Params(0.3, 2.0, SECH)) == ORIGIN

    def test_hamiltonian_frozen(self):
        # v = 0 removes every a-dependent term
        assert hamiltonian(State(1.0, 0.0, 0.0, 0.0), Params(7.0, 1.0, SECH)) == -0.25
        assert hamiltonian(State(0.0, 1.0, 0.0, 0.0), Params(3.0, 1.0, SECH)) == 1.5
        assert hamiltonian(ORIGIN, Params(1.0, 1.0, SECH2)) == 0.0

    @given(s=states, a=finite, b=st.floats(min_value=-5, max_value=5))
    def test_reversal_anticonjugates_field(self, s, a, b):
        # X(Q s) == -Q X(s) holds bit for bit: every term is either even or
        # odd in the flipped components
        p = Params(a, b, SECH2)
        lhs = vector_field(reversal(s), p)
        rhs = reversal(vector_field(s, p))
        assert lhs == State(-rhs.u, -rhs.v, -rhs.p_u, -rhs.p_v)

    @given(s=states, a=finite, b=st.floats(min_value=-5, max_value=5))
    def test_hamiltonian_reversal_invariant(self, s, a, b):
        p = Params(a, b, SECH)
        assert hamiltonian(reversal(s), p) == hamiltonian(s, p)

    @given(s=states)
    def test_reversal_is_involution(self, s):
        assert reversal(reversal(s)) == s

    def test_chi_residual(self):
        assert chi_residual(State(3.0, 0.25, -2.0, 9.0)) == (0.25, -2.0)
        assert chi_residual(ORIGIN) == (0.0, 0.0)


class TestParams:
    def test_coerces_to_float(self):
        p = Params(1, 2, SECH)
        assert isinstance(p.a, float) and isinstance(p.b, float)

    @pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            Params(bad, 1.0, SECH)
        with pytest.raises(ValueError):
            Params(1.0, bad, SECH)
