import pytest
from hypothesis import given, strategies as st

from collapselab import (Duration, ParticleNode, SuperpositionSpec,
                         ValidationError, compare_hypotheses, kaon_case_study,
                         kaon_superposition, leaves, make_constants,
                         predict_collapse_time, total_energy_difference,
                         with_measured)
from collapselab.structure import mass_for

CONST = make_constants()

TC_400_MEV = 5.0225274753727556e-05  # hand arithmetic, see test_analytic
TC_800_MEV = TC_400_MEV / 4.0


def elem(name, mass):
    return ParticleNode(name, mass)


def comp(name, *children):
    return ParticleNode(name, constituents=children)


K0 = comp("K0", elem("s", 500.0), elem("dbar", 300.0))
K0BAR = comp("K0bar", elem("d", 300.0), elem("sbar", 500.0))


class TestLeaves:
    def test_elementary_yields_itself(self):
        node = elem("m", 500.0)
        assert leaves(node) == (node,)

    def test_two_quark_order(self):
        assert [n.name for n in leaves(K0)] == ["s", "dbar"]

    def test_nested_depth_first(self):
        tree = comp("A", comp("B", elem("x", 1.0), elem("y", 2.0)), elem("z", 3.0))
        assert [n.name for n in leaves(tree)] == ["x", "y", "z"]


class TestTotalEnergyDifference:
    def test_kaon_pairing(self):
        assert total_energy_difference(K0, K0BAR).mev == 400.0

    def test_identical_branches_zero(self):
        assert total_energy_difference(K0, K0).mev == 0.0

    def test_small_example(self):
        a = comp("a", elem("a1", 2.0), elem("a2", 3.0))
        b = comp("b", elem("b1", 1.0), elem("b2", 4.0))
        assert total_energy_difference(a, b).mev == 2.0

    def test_leaf_count_mismatch_names_both_counts(self):
        lopsided = comp("L", elem("x", 1.0), elem("y", 2.0), elem("z", 3.0))
        with pytest.raises(ValidationError, match="3") as err:
            total_energy_difference(K0, lopsided)
        assert "2" in str(err.value)


class TestParticleNode:
    def test_rejects_empty_name(self):
        with pytest.raises(ValidationError):
            ParticleNode("", 1.0)

    def test_rejects_negative_mass(self):
        with pytest.raises(ValidationError):
            ParticleNode("x", -1.0)

    def test_elementary_requires_mass(self):
        with pytest.raises(ValidationError):
            ParticleNode("x")

    def test_composite_mass_optional(self):
        node = comp("K0", elem("s", 500.0), elem("dbar", 300.0))
        assert node.mass_mev is None
        assert not node.is_elementary


class TestSuperpositionSpec:
    def test_normalizes_amplitudes(self):
        spec = SuperpositionSpec("x", (K0, K0BAR), (1.0, 1.0))
        assert abs(spec.amplitudes[0]) == pytest.approx(2 ** -0.5)

    def test_rejects_single_branch(self):
        with pytest.raises(ValidationError):
            SuperpositionSpec("x", (K0,), (1.0,))

    def test_rejects_count_mismatch(self):
        with pytest.raises(ValidationError):
            SuperpositionSpec("x", (K0, K0BAR), (1.0,))

    def test_rejects_zero_vector(self):
        with pytest.raises(ValidationError):
            SuperpositionSpec("x", (K0, K0BAR), (0.0, 0.0))


class TestPredictCollapseTime:
    def test_structureless_equal_masses_never_collapse(self):
        spec = SuperpositionSpec("twins", (elem("p1", 500.0), elem("p2", 500.0)),
                                 (1.0, 1.0))
        report = predict_collapse_time(spec, CONST)
        assert report.predicted_tc is None
        assert not report.collapses

    def test_kaon_default(self):
        report = predict_collapse_time(kaon_superposition(), CONST)
        assert report.delta_e_total.mev == 400.0
        assert report.predicted_tc.seconds == pytest.approx(TC_400_MEV, rel=1e-12)

    def test_deeper_split_with_double_difference_is_four_times_faster(self):
        a = comp("A", elem("a1", 900.0), elem("a2", 100.0))
        b = comp("B", elem("b1", 500.0), elem("b2", 500.0))
        spec = SuperpositionSpec("split", (a, b), (1.0, -1.0))
        report = predict_collapse_time(spec, CONST)
        assert report.delta_e_total.mev == 800.0
        assert report.predicted_tc.seconds == pytest.approx(TC_800_MEV, rel=1e-12)

    def test_rejects_more_than_two_branches(self):
        spec = SuperpositionSpec("three", (K0, K0BAR, K0), (1.0, 1.0, 1.0))
        with pytest.raises(ValidationError):
            predict_collapse_time(spec, CONST)

    def test_amplitudes_do_not_matter(self):
        s1 = SuperpositionSpec("a", (K0, K0BAR), (1.0, 0.001))
        s2 = SuperpositionSpec("a", (K0, K0BAR), (0.6, 0.8j))
        r1 = predict_collapse_time(s1, CONST)
        r2 = predict_collapse_time(s2, CONST)
        assert r1.predicted_tc.seconds == r2.predicted_tc.seconds

    @given(scale=st.floats(min_value=0.01, max_value=100.0))
    def test_k_scaling_is_exact(self, scale):
        base = predict_collapse_time(kaon_superposition(), make_constants(k=1.0))
        scaled = predict_collapse_time(kaon_superposition(),
                                       make_constants(k=scale))
        assert scaled.predicted_tc.seconds == pytest.approx(
            scale * base.predicted_tc.seconds, rel=1e-12)


class TestCompareHypotheses:
    def _report(self, name, de):
        spec = SuperpositionSpec(name, (elem("a", de), elem("b", 0.0)), (1.0, 1.0))
        return predict_collapse_time(spec, CONST)

    def test_ranking_by_decades(self):
        fast = predict_collapse_time(kaon_superposition(), CONST)  # 5.02e-5 s
        slow = self._report("slow", 40000.0)  # 5.02e-9 s
        ranked = compare_hypotheses([slow, fast], 1e-4)
        assert [r.hypothesis_name for r in ranked] == ["K_L", "slow"]
        assert abs(ranked[0].log10_ratio) == pytest.approx(0.299, abs=5e-3)
        assert abs(ranked[1].log10_ratio) == pytest.approx(4.299, abs=5e-3)

    def test_exact_match_ranks_first(self):
        fast = predict_collapse_time(kaon_superposition(), CONST)
        exact = with_measured(fast, fast.predicted_tc)
        assert exact.log10_ratio == 0.0
        ranked = compare_hypotheses([self._report("slow", 40000.0), fast],
                                    fast.predicted_tc)
        assert ranked[0].hypothesis_name == "K_L"

    def test_all_no_collapse_keep_order_and_stay_incomparable(self):
        spec1 = SuperpositionSpec("n1", (elem("a", 5.0), elem("b", 5.0)), (1, 1))
        spec2 = SuperpositionSpec("n2", (elem("c", 9.0), elem("d", 9.0)), (1, 1))
        reports = [predict_collapse_time(s, CONST) for s in (spec1, spec2)]
        ranked = compare_hypotheses(reports, 1e-4)
        assert [r.hypothesis_name for r in ranked] == ["n1", "n2"]
        assert all(r.log10_ratio is None for r in ranked)

    def test_rejects_nonpositive_measured(self):
        with pytest.raises(ValidationError):
            compare_hypotheses([], 0.0)
        with pytest.raises(ValidationError):
            with_measured(self._report("x", 1.0), -1e-4)

    def test_log10_ratio_value(self):
        report = with_measured(predict_collapse_time(kaon_superposition(), CONST),
                               Duration(1e-4))
        # log10(5.0225274753727556e-05 / 1e-4) by hand
        assert report.log10_ratio == pytest.approx(-0.2990776787967091, rel=1e-12)


class TestKaonCaseStudy:
    def test_defaults(self):
        report = kaon_case_study(CONST)
        assert report.hypothesis_name == "K_L"
        assert report.delta_e_total.mev == 400.0
        assert report.predicted_tc.seconds == pytest.approx(TC_400_MEV, rel=1e-12)

    def test_equal_masses_remove_collapse(self):
        report = kaon_case_study(CONST, {"s": 400.0, "d": 400.0})
        assert report.predicted_tc is None

    def test_k_two_doubles_the_time(self):
        report = kaon_case_study(make_constants(k=2.0))
        assert report.predicted_tc.seconds == pytest.approx(2 * TC_400_MEV,
                                                            rel=1e-12)

    def test_missing_table_entry(self):
        with pytest.raises(ValidationError, match="dbar"):
            kaon_case_study(CONST, {"s": 500.0})

    def test_antiparticle_bar_fallback(self):
        assert mass_for({"s": 500.0}, "sbar") == 500.0
        assert mass_for({"sbar": 123.0}, "sbar") == 123.0
        with pytest.raises(ValidationError):
            mass_for({"s": 500.0}, "u")


# randomized tree properties -------------------------------------------------

masses = st.floats(min_value=0.0, max_value=1000.0,
                   allow_nan=False, allow_infinity=False)


def trees(max_depth=3):
    return st.recursive(
        st.builds(elem, st.just("leaf"), masses),
        lambda children: st.builds(
            lambda kids: comp("node", *kids),
            st.lists(children, min_size=1, max_size=3)),
        max_leaves=8)


@given(a=trees(), b=trees())
def test_symmetry_on_random_trees(a, b):
    la, lb = leaves(a), leaves(b)
    if len(la) != len(lb):
        with pytest.raises(ValidationError):
            total_energy_difference(a, b)
        return
    assert total_energy_difference(a, b).mev == total_energy_difference(b, a).mev


@given(a=trees())
def test_zero_law_on_random_trees(a):
    assert total_energy_difference(a, a).mev == 0.0


@given(a=trees(), b=trees(), pad=masses)
def test_padding_invariance_on_random_trees(a, b, pad):
    la, lb = leaves(a), leaves(b)
    if len(la) != len(lb):
        return
    base = total_energy_difference(a, b).mev
    padded_a = comp("padded_a", a, elem("pad", pad))
    padded_b = comp("padded_b", b, elem("pad", pad))
    assert total_energy_difference(padded_a, padded_b).mev == pytest.approx(
        base, abs=1e-9)
