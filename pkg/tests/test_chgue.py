"""Chiral-GUE-with-source closed forms against the generic machinery."""
import math

import numpy as np
import pytest

from biortho import (
    ChgueParams,
    Composition,
    ConfluentError,
    ConfluentSpec,
    DomainError,
    EnsembleSpec,
    HalfLine,
    build_kernel,
    chgue_gram,
    chgue_kernel,
    chgue_pdf,
    chgue_type_one,
    chgue_type_two,
    confluent_weights,
    ensemble_spec,
    gauss_laguerre,
    kernel_eval,
    kernel_sum_check,
    laguerre,
    laguerre_cd_kernel,
    pdf_eval,
    rank_decomposition,
    type_one,
    type_two,
    w_alpha,
    xi_family,
)
from biortho.ensembles import _dx_rule
from biortho.numerics import integrate_nd, log_gamma


class TestWeightAndParams:
    def test_w_alpha_zero_source_is_gamma_density(self):
        w = w_alpha(1.5, 0.0)
        rule = gauss_laguerre(48, 1.5)
        total = float(np.dot(rule.dx_weights, w(rule.nodes)))
        assert total == pytest.approx(1.0, rel=1e-12)

    def test_w_alpha_total_mass_with_source(self):
        # int w_alpha(x, a) dx = e^a (the Gram entry g_{1,j})
        a = 0.8
        w = w_alpha(0.5, a)
        rule = gauss_laguerre(64, 0.5)
        total = float(np.dot(rule.dx_weights, w(rule.nodes)))
        assert total == pytest.approx(math.exp(a), rel=1e-12)

    def test_params_validation(self):
        with pytest.raises(DomainError):
            ChgueParams(-0.5, (1.0,))
        with pytest.raises(DomainError):
            ChgueParams(0.0, (-1.0,))
        with pytest.raises(DomainError):
            ChgueParams(0.0, ())

    def test_w_alpha_validation(self):
        with pytest.raises(DomainError):
            w_alpha(-1.0, 0.0)
        with pytest.raises(DomainError):
            w_alpha(0.0, -0.1)


class TestGram:
    def test_closed_form_entries(self):
        p = ChgueParams(1.0, (0.3, 1.1, 2.0))
        g = chgue_gram(p)
        a = np.array(p.a)
        for i in range(3):
            assert np.allclose(g[i], a**i * np.exp(a), rtol=1e-14)

    def test_closed_vs_quadrature(self):
        rng = np.random.default_rng(2)
        for n in (2, 3, 4):
            for alpha in (0.0, 0.5, 1.0, 2.0):
                a = tuple(sorted(rng.uniform(0.05, 2.0, size=n), reverse=True))
                p = ChgueParams(alpha, a)
                closed = chgue_gram(p)
                quad = ensemble_spec(p).gram
                rel = np.max(np.abs(closed - quad) / np.abs(closed))
                assert rel < 1e-10


class TestPdf:
    def test_matches_generic_pdf(self):
        p = ChgueParams(1.0, (0.4, 1.3))
        spec = ensemble_spec(p)
        for pt in ([0.5, 2.0], [1.0, 4.5]):
            assert chgue_pdf(p, pt) == pytest.approx(pdf_eval(spec, pt), rel=1e-10)

    def test_normalization(self):
        # closed-form Z_N checked by 2-d tensor quadrature
        p = ChgueParams(0.0, (0.9, 0.2))
        rule = _dx_rule(gauss_laguerre(48, 0.0))
        total = integrate_nd(lambda x, y: chgue_pdf(p, [x, y]), [rule, rule])
        assert total == pytest.approx(1.0, rel=1e-8)

    def test_coincident_rejected(self):
        p = ChgueParams(0.0, (1.0, 1.0))
        with pytest.raises(ConfluentError):
            chgue_pdf(p, [0.5, 1.5])


class TestTypeFunctions:
    def test_type_two_vs_generic_solver(self):
        # the elementary-symmetric closed form against the moment solver on
        # the N distinct weights w_alpha(., a_i)
        alpha = 0.5
        a = (1.4, 0.7, 0.2)
        p = ChgueParams(alpha, a)
        from biortho import WeightSystem

        ws = WeightSystem(
            weights=tuple(w_alpha(alpha, ai) for ai in a),
            interval=HalfLine(),
            quad=gauss_laguerre(64, alpha),
        )
        generic = type_two(ws, Composition((1, 1, 1)))
        closed = chgue_type_two(p)
        x = np.linspace(0.1, 8.0, 9)
        assert np.allclose(closed(x), generic(x), rtol=1e-9, atol=1e-9)

    def test_type_one_vs_generic_solver(self):
        alpha = 0.5
        a = (1.4, 0.7, 0.2)
        p = ChgueParams(alpha, a)
        from biortho import WeightSystem

        ws = WeightSystem(
            weights=tuple(w_alpha(alpha, ai) for ai in a),
            interval=HalfLine(),
            quad=gauss_laguerre(64, alpha),
        )
        generic = type_one(ws, Composition((1, 1, 1)))
        closed = chgue_type_one(p)
        x = np.linspace(0.1, 8.0, 9)
        assert np.allclose(closed(x), generic(x), rtol=1e-8, atol=1e-10)

    def test_type_one_moments(self):
        p = ChgueParams(1.0, (1.2, 0.5, 0.1))
        q = chgue_type_one(p)
        rule = gauss_laguerre(64, 1.0)
        moments = [
            float(np.dot(rule.dx_weights, rule.nodes**j * q(rule.nodes)))
            for j in range(p.n)
        ]
        assert max(abs(m) for m in moments[:-1]) < 1e-11
        assert moments[-1] == pytest.approx(1.0, abs=1e-11)

    def test_type_two_coincident_sources_allowed(self):
        # the elementary-symmetric form needs no distinctness
        p = ChgueParams(0.0, (0.7, 0.7))
        val = chgue_type_two(p)(2.0)
        assert np.isfinite(val)

    def test_type_one_coincident_rejected(self):
        with pytest.raises(ConfluentError):
            chgue_type_one(ChgueParams(0.0, (0.7, 0.7 + 1e-10)))

    def test_series_path_matches_direct(self):
        # just above the series-switch spread both evaluators must agree
        alpha = 1.0
        a_tight = (0.500, 0.505, 0.509)  # spread 9e-3 -> series path
        a_loose = (0.500, 0.506, 0.512)  # spread 1.2e-2 -> direct path
        from biortho.chgue import _dd_direct, _dd_series

        x = np.linspace(0.2, 6.0, 5)
        for a in (a_tight, a_loose):
            arr = np.asarray(a)
            d = _dd_direct(alpha, arr, x)
            s = _dd_series(alpha, arr, x)
            assert np.allclose(d, s, rtol=1e-6, atol=1e-12)


class TestKernel:
    def test_residue_sum_vs_generic(self):
        # the closed kernel against the eta-c-xi double sum, N = 1..4
        rng = np.random.default_rng(3)
        for n in (1, 2, 3, 4):
            a = tuple(sorted(rng.uniform(0.1, 2.0, size=n), reverse=True))
            p = ChgueParams(1.0, a)
            kd = build_kernel(ensemble_spec(p))
            for _ in range(3):
                x, y = rng.uniform(0.2, 6.0, size=2)
                ref = kernel_eval(kd, float(x), float(y))
                val = chgue_kernel(p, float(x), float(y))
                assert val == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_quadrature_doubling(self):
        # doubling the u-rule must not move the kernel (resolution check)
        p = ChgueParams(0.5, (1.3, 0.7, 0.2))
        base = 2 * p.n + 40
        for x, y in [(0.5, 2.0), (3.0, 1.2), (6.0, 0.4)]:
            v1 = chgue_kernel(p, x, y, n_quad=base)
            v2 = chgue_kernel(p, x, y, n_quad=2 * base)
            assert abs(v1 - v2) <= 1e-10 * max(1.0, abs(v1))

    def test_trace_equals_n(self):
        # the residue-sum form loses all digits to cancellation at large
        # arguments, so the trace integral runs through the generic path
        # (which the residue sum is checked against on the compact window)
        p = ChgueParams(1.0, (1.5, 0.6))
        kd = build_kernel(ensemble_spec(p))
        rule = gauss_laguerre(64, 1.0)
        trace = float(
            np.dot(rule.dx_weights, [kernel_eval(kd, t, t) for t in rule.nodes])
        )
        assert trace == pytest.approx(p.n, rel=1e-9)

    def test_large_argument_cancellation_window(self):
        # inside ~[0, 12] the residue sum tracks the generic path; far
        # outside it degrades (documented limitation, not silent)
        p = ChgueParams(1.0, (1.5, 0.6))
        kd = build_kernel(ensemble_spec(p))
        v, ref = chgue_kernel(p, 10.0, 10.0), kernel_eval(kd, 10.0, 10.0)
        assert v == pytest.approx(ref, rel=1e-7)

    def test_clustered_source_matches_laguerre(self):
        # a -> 0 cluster: the kernel approaches the source-free kernel at
        # O(max a); checked against the Christoffel-Darboux closed form
        p = ChgueParams(1.0, (1e-5, 2e-5, 3e-5))
        for x, y in [(0.7, 2.3), (4.0, 1.1)]:
            ref = laguerre_cd_kernel(1.0, 3, x, y)
            assert chgue_kernel(p, x, y) == pytest.approx(ref, abs=2e-4, rel=1e-3)

    def test_domain(self):
        p = ChgueParams(0.0, (1.0, 0.5))
        with pytest.raises(DomainError):
            chgue_kernel(p, -1.0, 1.0)
        with pytest.raises(ConfluentError):
            chgue_kernel(ChgueParams(0.0, (1.0, 1.0)), 1.0, 2.0)


class TestKernelStaircaseSum:
    def test_sum_identity(self):
        rng = np.random.default_rng(4)
        for n in (2, 3):
            a = tuple(sorted(rng.uniform(0.1, 2.0, size=n), reverse=True))
            p = ChgueParams(0.5, a)
            for _ in range(3):
                x, y = rng.uniform(0.2, 6.0, size=2)
                kernel, total = kernel_sum_check(p, float(x), float(y))
                assert kernel == pytest.approx(total, rel=1e-9)

    def test_requires_decreasing(self):
        p = ChgueParams(0.0, (0.5, 1.0))
        with pytest.raises(DomainError):
            kernel_sum_check(p, 1.0, 2.0)


class TestLaguerreLimits:
    def test_type_two_limit(self):
        # a -> 0: P_N -> (-1)^N N! L_N^alpha
        n = 3
        x = np.array([0.5, 2.0, 5.0])
        for alpha in (0.0, 1.0):
            p = chgue_type_two(ChgueParams(alpha, (1e-5,) * n))
            ref = (-1.0) ** n * math.factorial(n) * laguerre(n, alpha, x)
            # relative deviation: the exact first-order term e_1 2! L_2(x)
            # already exceeds 1e-4 absolute at x = 5
            assert np.max(np.abs(p(x) - ref) / np.abs(ref)) < 1e-4

    def test_type_one_limit(self):
        # a -> 0: Q_N -> (-1)^{N-1}/(N+alpha-1)! x^alpha e^{-x} L_{N-1}^alpha
        n = 3
        x = np.array([0.5, 2.0, 5.0])
        for alpha in (0.0, 1.0):
            a = (1e-5, 2e-5, 3e-5)
            q = chgue_type_one(ChgueParams(alpha, a))
            pref = (-1.0) ** (n - 1) * math.exp(-log_gamma(n + alpha))
            ref = pref * x**alpha * np.exp(-x) * laguerre(n - 1, alpha, x)
            assert np.max(np.abs(q(x) - ref)) < 1e-4

    def test_linear_convergence_rate(self):
        # halving the source scale should halve the deviation (factor 1.5-2.5)
        n, alpha = 3, 1.0
        x = np.array([0.5, 2.0, 5.0])
        ref = (-1.0) ** n * math.factorial(n) * laguerre(n, alpha, x)

        def dev(scale):
            p = chgue_type_two(ChgueParams(alpha, (scale, 2 * scale, 3 * scale)))
            return np.max(np.abs(p(x) - ref))

        d1, d2 = dev(1e-5), dev(5e-6)
        assert 1.5 <= d1 / d2 <= 2.5


class TestConfluentWeights:
    def test_structure(self):
        spec = ConfluentSpec(b=(0.9, 0.0), m=Composition((3, 2)))
        ws, comp = confluent_weights(spec, 1.0)
        # b=0.9 splits into (w_alpha, w_{alpha+1}) with parts (2, 1);
        # b=0 keeps a single weight with part 2
        assert comp.parts == (2, 1, 2)
        assert ws.d == 3
        assert comp.weight == 5

    def test_validation(self):
        with pytest.raises(DomainError):
            ConfluentSpec(b=(0.5, 0.9), m=Composition((1, 1)))  # not decreasing
        with pytest.raises(DomainError):
            ConfluentSpec(b=(0.5,), m=Composition((1, 1)))  # length mismatch

    def test_confluent_type_two_is_source_limit(self):
        # the confluent moment system at b reproduces the coalesced closed
        # form (which is continuous in a)
        alpha = 0.5
        b = 0.8
        spec = ConfluentSpec(b=(b,), m=Composition((2,)))
        ws, comp = confluent_weights(spec, alpha)
        p_conf = type_two(ws, comp)
        p_closed = chgue_type_two(ChgueParams(alpha, (b, b)))
        x = np.linspace(0.1, 8.0, 9)
        assert np.allclose(p_conf(x), p_closed(x), rtol=1e-8, atol=1e-8)

    def test_confluent_kernel_matches_nearby_distinct(self):
        # kernel is continuous in the sources: the confluent-path kernel at
        # b (multiplicity 2) ~ distinct-path kernel at b +- delta
        alpha, b, delta = 0.0, 0.6, 5e-4
        spec = ConfluentSpec(b=(b,), m=Composition((2,)))
        ws, comp = confluent_weights(spec, alpha)
        xi = tuple(xi_family(ws, comp))
        eta = tuple(
            (lambda x, i=i: np.asarray(x, dtype=float) ** i) for i in range(2)
        )
        kd = build_kernel(
            EnsembleSpec(n=2, interval=HalfLine(), eta=eta, xi=xi, quad=ws.quad)
        )
        p = ChgueParams(alpha, (b + delta, b - delta))
        for x, y in [(0.5, 1.7), (3.0, 0.9)]:
            conf = kernel_eval(kd, x, y)
            dist = chgue_kernel(p, x, y)
            assert conf == pytest.approx(dist, rel=5e-4, abs=1e-8)


class TestLaguerreCdKernel:
    def test_against_op_system(self):
        from biortho import HalfLine, op_from_weight

        alpha, n = 1.0, 3
        sys = op_from_weight(
            lambda t: np.asarray(t, float) ** alpha * np.exp(-np.asarray(t, float)),
            HalfLine(),
            n,
            quad=gauss_laguerre(64, alpha),
        )
        for x, y in [(0.5, 2.0), (4.0, 1.5)]:
            cd = (y**alpha * math.exp(-y)) * sum(
                sys.eval(k, x) * sys.eval(k, y) / sys.norms[k] for k in range(n)
            )
            assert laguerre_cd_kernel(alpha, n, x, y) == pytest.approx(cd, rel=1e-11)

    def test_domain(self):
        with pytest.raises(DomainError):
            laguerre_cd_kernel(0.0, 3, 1.0, 1.0)
        with pytest.raises(DomainError):
            laguerre_cd_kernel(0.0, 0, 1.0, 2.0)


class TestRankDecomposition:
    @staticmethod
    def confluent_reference(alpha, a, n):
        """Independent kernel for a = (a_1..a_r, 0..0) through the confluent
        weight system and the generic monomial-eta machinery."""
        b = tuple(dict.fromkeys(a))
        mult = tuple(sum(1 for v in a if v == bv) for bv in b)
        ws, comp = confluent_weights(
            ConfluentSpec(b=b, m=Composition(mult)), alpha
        )
        xi = tuple(xi_family(ws, comp))
        eta = tuple(
            (lambda x, i=i: np.asarray(x, dtype=float) ** i) for i in range(n)
        )
        return build_kernel(
            EnsembleSpec(n=n, interval=HalfLine(), eta=eta, xi=xi, quad=ws.quad)
        )

    def test_identity(self):
        rng = np.random.default_rng(6)
        for n, r, a in ((3, 1, (0.9, 0.0, 0.0)), (4, 2, (1.2, 0.5, 0.0, 0.0))):
            for alpha in (0.0, 1.0):
                p = ChgueParams(alpha, a)
                kd = self.confluent_reference(alpha, a, n)
                for _ in range(3):
                    x, y = rng.uniform(0.3, 5.0, size=2)
                    full, unpert, corr = rank_decomposition(p, r, float(x), float(y))
                    assert full == pytest.approx(unpert + corr, rel=1e-14)
                    ref = kernel_eval(kd, float(x), float(y))
                    assert full == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_rank_zero(self):
        # r = 0 is the pure Laguerre kernel, no correction
        p = ChgueParams(1.0, (0.0, 0.0, 0.0))
        full, unpert, corr = rank_decomposition(p, 0, 0.8, 2.5)
        assert corr == 0.0
        assert full == pytest.approx(laguerre_cd_kernel(1.0, 3, 0.8, 2.5), rel=1e-14)

    def test_validation(self):
        p = ChgueParams(0.0, (0.9, 0.0, 0.0))
        with pytest.raises(DomainError):
            rank_decomposition(p, 3, 1.0, 2.0)
        with pytest.raises(DomainError):
            rank_decomposition(ChgueParams(0.0, (0.9, 0.5, 0.0)), 1, 1.0, 2.0)
