import itertools
import json
import math

import pytest

from huntbench.ops.cvss import (
    CvssError,
    CvssInput,
    CvssVector,
    Scope,
    cvss_base_score,
    cvss_impact,
    cvss_impact_subscore,
    exploitability_subscore,
    parse_vector,
    round_up,
    score_vector,
)

from conftest import fixture_path


def load_vector_fixtures():
    with open(fixture_path("cvss_vectors.json"), encoding="utf-8") as fh:
        return json.load(fh)["cases"]


FIXTURE_VECTORS = load_vector_fixtures()


@pytest.mark.parametrize(
    "vector,expected",
    [(row["vector"], row["score"]) for row in FIXTURE_VECTORS],
    ids=[row["vector"] for row in FIXTURE_VECTORS],
)
def test_known_vector_scores(vector, expected):
    assert score_vector(vector) == pytest.approx(expected, abs=1e-9)


def test_fixture_coverage():
    # The frozen fixture set must exercise both scope branches, a capped
    # 10.0 score, and zero-impact vectors.
    rows = FIXTURE_VECTORS
    assert len(rows) == 30
    assert any("/S:U/" in r["vector"] for r in rows)
    assert any("/S:C/" in r["vector"] for r in rows)
    assert any(r["score"] == 10.0 for r in rows)
    assert any(r["score"] == 0.0 for r in rows)


class TestRoundUp:
    def test_exact_tenths_unchanged(self):
        for i in range(101):
            assert round_up(i / 10) == pytest.approx(i / 10)

    def test_rounds_up_not_nearest(self):
        assert round_up(4.02) == 4.1
        assert round_up(4.0000001) == 4.0  # below 1e-5 precision collapses
        assert round_up(8.60001) == 8.7

    def test_float_artifact_resistance(self):
        # 0.1 + 0.2 style drift must not push a value into the next bucket.
        assert round_up(8.220000000000001) == 8.3
        assert round_up(0.30000000000000004) == 0.3

    def test_oracle_decimal(self):
        # Independent oracle: decimal ceiling at one decimal after
        # quantizing to 1e-5.
        from decimal import Decimal, ROUND_CEILING, ROUND_HALF_EVEN

        for i in range(0, 100001, 7):
            x = i / 10000.0
            q = Decimal(x).quantize(Decimal("0.00001"), rounding=ROUND_HALF_EVEN)
            expected = float(q.quantize(Decimal("0.1"), rounding=ROUND_CEILING))
            assert round_up(x) == pytest.approx(expected), x


def test_impact_subscore_formula():
    for c, i, a in itertools.product((0.0, 0.22, 0.56), repeat=3):
        expected = 1 - (1 - c) * (1 - i) * (1 - a)
        assert cvss_impact_subscore(c, i, a) == pytest.approx(expected)


def test_impact_subscore_rejects_out_of_range():
    with pytest.raises(CvssError):
        cvss_impact_subscore(1.5, 0.0, 0.0)


def test_scope_adjustment_branches():
    isc = 1 - (1 - 0.56) ** 3
    assert cvss_impact(isc, Scope.UNCHANGED) == pytest.approx(6.42 * isc)
    changed = 7.52 * (isc - 0.029) - 3.25 * (isc - 0.02) ** 15
    assert cvss_impact(isc, Scope.CHANGED) == pytest.approx(changed)


def test_exploitability_formula():
    val = exploitability_subscore("N", "L", "N", "N", Scope.UNCHANGED)
    assert val == pytest.approx(8.22 * 0.85 * 0.77 * 0.85 * 0.85)


def test_pr_weight_depends_on_scope():
    low_u = exploitability_subscore("N", "L", "L", "N", Scope.UNCHANGED)
    low_c = exploitability_subscore("N", "L", "L", "N", Scope.CHANGED)
    assert low_u == pytest.approx(8.22 * 0.85 * 0.77 * 0.62 * 0.85)
    assert low_c == pytest.approx(8.22 * 0.85 * 0.77 * 0.68 * 0.85)


def test_zero_impact_scores_zero():
    assert score_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:N") == 0.0
    assert score_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:N/I:N/A:N") == 0.0


def test_cap_at_ten_is_tight():
    # A maximal changed-scope vector hits the cap exactly...
    assert score_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:C/C:H/I:H/A:H") == 10.0
    # ...and the uncapped unchanged-scope counterpart stays below it.
    assert score_vector("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H") == 9.8


_ORDER = {"N": 0, "L": 1, "H": 2}


def all_vectors():
    for av, ac, pr, ui, s, c, i, a in itertools.product(
        "NALP", "LH", "NLH", "NR", "UC", "HLN", "HLN", "HLN"
    ):
        yield CvssVector(av, ac, pr, ui,
                         Scope.UNCHANGED if s == "U" else Scope.CHANGED,
                         c, i, a)


def test_exhaustive_properties_all_2592_vectors():
    # Over the full metric space: scores stay in [0, 10], are one-decimal
    # values, and raising any CIA component never lowers the score.
    for v in all_vectors():
        score = score_vector(v)
        assert 0.0 <= score <= 10.0
        assert math.isclose(score * 10, round(score * 10), abs_tol=1e-9)


@pytest.mark.parametrize("component", ["c", "i", "a"])
def test_monotone_in_cia(component):
    for v in all_vectors():
        current = getattr(v, component)
        if current == "H":
            continue
        bumped = {"N": "L", "L": "H"}[current]
        higher = CvssVector(**{**v.__dict__, component: bumped})
        assert score_vector(higher) >= score_vector(v), (v, higher)


def test_monotone_in_attack_vector():
    # N >= A >= L >= P, everything else fixed.
    for v in all_vectors():
        if v.av != "P":
            continue
        scores = [
            score_vector(CvssVector(**{**v.__dict__, "av": av}))
            for av in ("P", "L", "A", "N")
        ]
        assert scores == sorted(scores)


class TestParseVector:
    def test_round_trip(self):
        for row in FIXTURE_VECTORS:
            v = parse_vector(row["vector"])
            assert v.vector_string == row["vector"].replace("CVSS:3.0", "CVSS:3.1")

    def test_embedded_in_prose(self):
        v = parse_vector(
            "Scored as CVSS:3.1/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H per NVD."
        )
        assert (v.av, v.ac) == ("N", "H")

    def test_prefix_optional(self):
        v = parse_vector("AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H")
        assert score_vector(v) == 7.8

    def test_rejects_garbage(self):
        with pytest.raises(CvssError):
            parse_vector("AV:X/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H")
        with pytest.raises(CvssError):
            parse_vector("no vector here")


def test_input_validation():
    with pytest.raises(CvssError):
        CvssInput(1.2, 0.0, 0.0, 1.0, Scope.UNCHANGED)
    with pytest.raises(CvssError):
        CvssInput(0.5, 0.5, 0.5, -1.0, Scope.UNCHANGED)


def test_base_score_zero_when_impact_nonpositive():
    inp = CvssInput(0.0, 0.0, 0.0, 3.9, Scope.UNCHANGED)
    assert cvss_base_score(inp, cvss_impact(0.0, Scope.UNCHANGED)) == 0.0
