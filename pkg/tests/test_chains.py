"""Nested chain construction, validation, codebooks, and rates."""

import json
import math
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest

from latmac.chains import (
    EnumerationTooLargeError,
    NestingError,
    build_chain,
    code_rate,
    enumerate_codebook,
    require_nesting,
    sample_codeword,
    validate_chain,
)
from latmac.lattices import (
    integer_lattice,
    mod_lattice,
    nearest_point,
    quantize_batch,
    scale_lattice,
)

# 99.73% quantile of chi-square with 3 degrees of freedom (uniformity test
# over the 4-point scalar codebook)
CHI2_3_9973 = 14.1563


def scalar_chain(k, f, power=1.0 / 12.0):
    return build_chain("zn", 1, k, f, power)


class TestBuildChain:
    def test_scalar_rates(self):
        ch = scalar_chain(2, 4)
        assert ch.s == pytest.approx(1.0, rel=1e-12)
        assert code_rate(ch, 1) == pytest.approx(3.0, abs=1e-9)
        assert code_rate(ch, 2) == pytest.approx(2.0, abs=1e-9)

    def test_degenerate_identity_chain(self):
        ch = scalar_chain(1, 1)
        assert code_rate(ch, 1) == pytest.approx(0.0, abs=1e-12)
        assert code_rate(ch, 2) == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(ch.fine.generator, ch.shaping1.generator)

    def test_e8_rates(self):
        ch = build_chain("e8", 8, 2, 2, 1.0)
        assert code_rate(ch, 1) == pytest.approx(2.0, abs=1e-9)
        assert code_rate(ch, 2) == pytest.approx(1.0, abs=1e-9)

    def test_e8_power_normalization(self):
        ch = build_chain("e8", 8, 2, 2, 1.0)
        assert ch.sigma2_shaping == pytest.approx(1.0, rel=1e-9)
        for res in validate_chain(ch):
            assert res.passed, res

    def test_alpha_is_exact_rational(self):
        assert scalar_chain(3, 2).alpha == Fraction(1, 3)

    def test_invalid_parameters(self):
        for bad in (dict(k=0), dict(f=0), dict(k=-1)):
            with pytest.raises(ValueError):
                build_chain("zn", 2, bad.get("k", 2), bad.get("f", 2), 1.0)
        with pytest.raises(ValueError):
            build_chain("zn", 2, 1.5, 2, 1.0)
        with pytest.raises(ValueError):
            build_chain("e8", 4, 2, 2, 1.0)
        with pytest.raises(ValueError):
            build_chain("dn", 1, 2, 2, 1.0)
        with pytest.raises(ValueError):
            build_chain("zn", 2, 2, 2, 0.0)
        with pytest.raises(ValueError):
            build_chain("leech", 24, 2, 2, 1.0)

    def test_rate_identity_across_chains(self):
        for family, n in (("zn", 1), ("zn", 4), ("dn", 4), ("e8", 8)):
            for k, f in ((1, 1), (2, 2), (3, 4)):
                ch = build_chain(family, n, k, f, 0.7)
                r1 = code_rate(ch, 1)
                r2 = code_rate(ch, 2)
                assert abs(r2 - (r1 + math.log2(ch.alpha_float))) <= 1e-9

    def test_to_dict_is_json_ready(self):
        d = build_chain("dn", 4, 2, 2, 1.0).to_dict()
        parsed = json.loads(json.dumps(d))
        assert parsed["family"] == "dn"
        assert parsed["alpha"] == [1, 2]
        assert parsed["rate1"] == pytest.approx(parsed["rate2"] + 1.0, abs=1e-9)


class TestValidate:
    def test_valid_chain_all_pass(self):
        for res in validate_chain(scalar_chain(2, 2)):
            assert res.passed, res

    def test_coarse_fine_swap_fails_nesting(self):
        ch = scalar_chain(2, 2)
        broken = replace(ch, fine=scale_lattice(ch.shaping1, 3.0))
        names = {r.name: r.passed for r in validate_chain(broken)}
        assert not names["intermediate in fine"]

    def test_non_reciprocal_alpha_fails_lead_nesting(self):
        # alpha = 2/3 with equal shaping lattices: 1/alpha is not an
        # integer, so the coarse lattice cannot nest in alpha times it
        ch = scalar_chain(1, 6)
        broken = replace(ch, alpha=Fraction(2, 3))
        names = {r.name: r.passed for r in validate_chain(broken)}
        assert not names["shaping1 in intermediate"]

    def test_require_nesting_raises(self):
        with pytest.raises(NestingError):
            require_nesting(integer_lattice(1), integer_lattice(1, 2.0 / 3.0), "test")
        require_nesting(integer_lattice(1), integer_lattice(1, 0.5), "test")


class TestCodebooks:
    def test_scalar_user1_set(self):
        # four cosets of (1/4)Z modulo Z; boundary cosets take the
        # representative on the closed upper side of the region
        cb = enumerate_codebook(scalar_chain(2, 2), 1)
        assert cb.size == 4
        assert np.array_equal(cb.points.ravel(), [-0.25, 0.0, 0.25, 0.5])

    def test_scalar_user2_set(self):
        cb = enumerate_codebook(scalar_chain(2, 2), 2)
        assert cb.size == 2
        assert np.array_equal(cb.points.ravel(), [0.0, 0.5])

    def test_identity_chain_codebook(self):
        for user in (1, 2):
            cb = enumerate_codebook(scalar_chain(1, 1), user)
            assert cb.size == 1
            assert np.array_equal(cb.points, [[0.0]])

    def test_sizes_and_membership(self):
        ch = build_chain("dn", 2, 2, 2, 1.0)
        for user, m in ((1, 4), (2, 2)):
            cb = enumerate_codebook(ch, user)
            assert cb.size == m**2
            coding = ch.fine_lattice(user)
            shaping = ch.shaping_lattice(user)
            coeff = cb.points @ np.linalg.inv(coding.generator)
            assert np.abs(coeff - np.round(coeff)).max() < 1e-9
            for p in cb.points:
                assert np.allclose(mod_lattice(shaping, p), p, atol=1e-12)

    def test_distinct_cosets(self):
        ch = build_chain("e8", 8, 1, 2, 1.0)
        cb = enumerate_codebook(ch, 1)
        assert cb.size == 256
        assert len({tuple(np.round(p, 9)) for p in cb.points}) == 256

    def test_enumeration_guard(self):
        with pytest.raises(EnumerationTooLargeError):
            enumerate_codebook(build_chain("zn", 8, 4, 2, 1.0), 1)

    def test_bad_user(self):
        ch = scalar_chain(2, 2)
        with pytest.raises(ValueError):
            enumerate_codebook(ch, 3)
        with pytest.raises(ValueError):
            ch.shaping_lattice(0)


class TestSampleCodeword:
    def test_uniform_chi_square(self):
        ch = scalar_chain(2, 2)
        cb = enumerate_codebook(ch, 1)
        rng = np.random.default_rng(2024)
        draws = np.array([sample_codeword(ch, 1, rng)[0] for _ in range(100_000)])
        counts = np.array([(draws == p).sum() for p in cb.points.ravel()])
        assert counts.sum() == 100_000
        expected = 100_000 / 4
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < CHI2_3_9973

    def test_always_inside_shaping_region(self):
        ch = build_chain("e8", 8, 2, 2, 1.0)
        rng = np.random.default_rng(7)
        shaping = ch.shaping_lattice(2)
        for _ in range(200):
            v = sample_codeword(ch, 2, rng)
            assert np.abs(quantize_batch(shaping, v[None, :])[0]).max() == 0.0

    def test_identity_chain_always_zero(self):
        ch = scalar_chain(1, 1)
        rng = np.random.default_rng(8)
        for _ in range(20):
            assert np.array_equal(sample_codeword(ch, 1, rng), [0.0])


class TestRecoveryLattice:
    def test_intermediate_is_scaled_shaping(self):
        ch = scalar_chain(2, 2)
        inter = ch.recovery_lattice(lead=2)
        assert inter.scale == pytest.approx(ch.s / 2)

    def test_user2_coding_is_k_times_fine(self):
        ch = scalar_chain(2, 4)
        assert ch.fine_lattice(2).scale == pytest.approx(2 * ch.fine.scale)

    def test_t1_closure_over_random_trials(self):
        # the target combination always lands back in the fine lattice
        # inside the lead shaping region; this is what the intermediate
        # nesting buys
        from latmac.macsim import combination_target

        ch = build_chain("dn", 4, 2, 2, 1.0)
        rng = np.random.default_rng(555)
        fine_inv = np.linalg.inv(ch.fine.generator)
        for _ in range(1000):
            v1 = sample_codeword(ch, 1, rng)
            v2 = sample_codeword(ch, 2, rng)
            d2 = rng.random(4) @ ch.shaping2.generator
            t = combination_target(ch, v1, v2, mod_lattice(ch.shaping2, d2))
            coeff = t @ fine_inv
            assert np.abs(coeff - np.round(coeff)).max() < 1e-9
            assert np.allclose(mod_lattice(ch.shaping1, t), t, atol=1e-12)
