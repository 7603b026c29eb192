import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stancenet.corpus import AnnotatedSample, StanceLabel
from stancenet.errors import DataError
from stancenet.evalkit import (
    ConfusionMatrix,
    cohen_kappa,
    confusion,
    metrics,
    recall_by_sublabel,
    render_agreement_text,
    render_metrics_text,
    render_sublabel_text,
)

CLASSES = ("AntiTrans", "ProTrans", "Neutral")


# -- independent oracle: exact rational metrics ----------------------------------


def oracle_metrics(preds: dict, truth: dict):
    evaluated = {k: v for k, v in preds.items() if v != "Unclassified"}
    accuracy = (
        Fraction(sum(1 for k, v in evaluated.items() if truth[k] == v), len(evaluated))
        if evaluated
        else None
    )
    per_class = {}
    for cls in CLASSES:
        tp = sum(1 for k, v in evaluated.items() if v == cls and truth[k] == cls)
        pred_cls = sum(1 for v in evaluated.values() if v == cls)
        true_cls = sum(1 for k in evaluated if truth[k] == cls)
        precision = Fraction(tp, pred_cls) if pred_cls else None
        recall = Fraction(tp, true_cls) if true_cls else None
        if precision is None or recall is None or precision + recall == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class[cls] = (precision, recall, f1)
    return per_class, accuracy


def _assert_matches_fraction(value, fraction):
    if fraction is None:
        assert value is None
    else:
        assert value == pytest.approx(float(fraction), abs=1e-12)


# -- confusion -------------------------------------------------------------------


def test_confusion_all_correct_diagonal():
    preds = {f"p{i}": "ProTrans" for i in range(10)}
    cm = confusion(preds, dict(preds))
    assert sum(cm.counts[i][i] for i in range(3)) == 10


def test_confusion_empty():
    cm = confusion({}, {})
    assert cm.total == 0
    assert all(v == 0 for row in cm.counts for v in row)


def test_confusion_hand_counts():
    preds = {"a1": "AntiTrans", "a2": "AntiTrans", "a3": "Neutral"}
    truth = {"a1": "AntiTrans", "a2": "AntiTrans", "a3": "AntiTrans"}
    cm = confusion(preds, truth)
    assert cm.row("AntiTrans") == [2, 0, 1]


def test_confusion_excludes_unclassified():
    preds = {"a": "AntiTrans", "b": "Unclassified"}
    truth = {"a": "AntiTrans", "b": "ProTrans"}
    cm = confusion(preds, truth)
    assert cm.total == 1
    assert cm.unclassified == 1


def test_confusion_missing_truth_listed():
    with pytest.raises(DataError, match="ghost"):
        confusion({"ghost": "Neutral"}, {})


# -- metrics ---------------------------------------------------------------------


def test_metrics_perfect_diagonal():
    cm = ConfusionMatrix(classes=CLASSES, counts=[[4, 0, 0], [0, 3, 0], [0, 0, 2]])
    report = metrics(cm)
    for cls in CLASSES:
        m = report.per_class[cls]
        assert (m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0)
    assert report.accuracy == 1.0


def test_metrics_zero_prediction_column_undefined():
    cm = ConfusionMatrix(classes=CLASSES, counts=[[0, 1, 0], [0, 2, 0], [0, 1, 0]])
    report = metrics(cm)
    assert report.per_class["AntiTrans"].precision is None
    assert report.per_class["Neutral"].precision is None


def test_metrics_derived_fixture():
    # rows Anti=[2,0,1], Pro=[0,3,0], Neutral=[1,0,3]
    cm = ConfusionMatrix(classes=CLASSES, counts=[[2, 0, 1], [0, 3, 0], [1, 0, 3]])
    report = metrics(cm)
    anti = report.per_class["AntiTrans"]
    assert anti.precision == pytest.approx(2 / 3, abs=1e-12)
    assert anti.recall == pytest.approx(2 / 3, abs=1e-12)
    assert report.accuracy == pytest.approx(8 / 10, abs=1e-12)


def test_metrics_empty_matrix_undefined_accuracy():
    cm = ConfusionMatrix(classes=CLASSES, counts=[[0] * 3 for _ in range(3)])
    assert metrics(cm).accuracy is None


def test_metrics_matches_fraction_oracle_on_random_vectors():
    rng = random.Random(13)
    for _ in range(200):
        n = rng.randint(1, 40)
        truth = {f"p{i}": rng.choice(CLASSES) for i in range(n)}
        preds = {
            f"p{i}": rng.choice(CLASSES + ("Unclassified",)) for i in range(n)
        }
        report = metrics(confusion(preds, truth))
        want_classes, want_acc = oracle_metrics(preds, truth)
        _assert_matches_fraction(report.accuracy, want_acc)
        for cls in CLASSES:
            got = report.per_class[cls]
            w_p, w_r, w_f1 = want_classes[cls]
            _assert_matches_fraction(got.precision, w_p)
            _assert_matches_fraction(got.recall, w_r)
            _assert_matches_fraction(got.f1, w_f1)


def test_permuting_sample_order_changes_nothing():
    rng = random.Random(3)
    truth = {f"p{i}": rng.choice(CLASSES) for i in range(30)}
    preds = {f"p{i}": rng.choice(CLASSES) for i in range(30)}
    shuffled_preds = dict(sorted(preds.items(), key=lambda _: rng.random()))
    assert metrics(confusion(preds, truth)).to_dict() == metrics(
        confusion(shuffled_preds, truth)
    ).to_dict()


# -- sublabel recall --------------------------------------------------------------


def _sample(post_id, primary, sublabels):
    return AnnotatedSample(post_id, "a1", StanceLabel(primary, frozenset(sublabels)), 0)


def test_sublabel_recall_all_correct():
    annotations = [_sample(f"p{i}", "ProTrans", {"CEL"}) for i in range(4)]
    preds = {f"p{i}": "ProTrans" for i in range(4)}
    report = recall_by_sublabel(preds, annotations)
    assert report.rows["CEL"].recall == 1.0
    assert report.rows["CEL"].proportion == 1.0


def test_sublabel_recall_partial():
    annotations = [_sample(f"p{i}", "AntiTrans", {"TM"}) for i in range(3)]
    preds = {"p0": "AntiTrans", "p1": "AntiTrans", "p2": "Neutral"}
    report = recall_by_sublabel(preds, annotations)
    assert report.rows["TM"].recall == pytest.approx(2 / 3, abs=1e-12)


def test_sublabel_zero_support_omitted_with_note():
    annotations = [_sample("p0", "ProTrans", {"CEL"})]
    report = recall_by_sublabel({"p0": "ProTrans"}, annotations)
    assert "REF" not in report.rows
    assert any("REF" in note for note in report.notes)


def test_sublabel_proportion_uses_total_samples():
    annotations = [
        _sample("p0", "ProTrans", {"CEL"}),
        _sample("p1", "Neutral", set()),
        _sample("p2", "Neutral", set()),
        _sample("p3", "ProTrans", {"CEL"}),
    ]
    preds = {f"p{i}": "Neutral" for i in range(4)}
    report = recall_by_sublabel(preds, annotations)
    assert report.rows["CEL"].proportion == pytest.approx(0.5)
    assert report.rows["CEL"].recall == 0.0


# -- kappa ------------------------------------------------------------------------


def test_kappa_perfect_agreement():
    a = {"1": "A", "2": "B", "3": "A"}
    assert cohen_kappa(a, dict(a)).kappa == 1.0


def test_kappa_derived_fixture_exact():
    a = {"1": "A", "2": "A", "3": "B", "4": "B"}
    b = {"1": "A", "2": "A", "3": "B", "4": "A"}
    report = cohen_kappa(a, b)
    assert report.observed == 0.75
    assert report.expected == 0.5
    assert report.kappa == 0.5


def test_kappa_degenerate_marginals_undefined():
    a = {"1": "A", "2": "A"}
    b = {"1": "A", "2": "A"}
    report = cohen_kappa(a, b)
    assert report.kappa is None
    assert "undefined" in report.note


def test_kappa_requires_same_ids():
    with pytest.raises(DataError):
        cohen_kappa({"1": "A"}, {"2": "A"})


@given(
    st.dictionaries(
        st.text(min_size=1, max_size=3),
        st.tuples(st.sampled_from("ABC"), st.sampled_from("ABC")),
        min_size=1,
        max_size=30,
    )
)
def test_kappa_symmetry(pairs):
    a = {k: v[0] for k, v in pairs.items()}
    b = {k: v[1] for k, v in pairs.items()}
    left = cohen_kappa(a, b)
    right = cohen_kappa(b, a)
    if left.kappa is None:
        assert right.kappa is None
    else:
        assert abs(left.kappa - right.kappa) <= 1e-12


# -- rendering ---------------------------------------------------------------------


def test_render_tables_smoke():
    cm = ConfusionMatrix(classes=CLASSES, counts=[[2, 0, 1], [0, 3, 0], [1, 0, 3]])
    report = metrics(cm)
    text = render_metrics_text(report, "fixture-run")
    assert "Accuracy" in text and "fixture-run" in text
    annotations = [_sample("p0", "ProTrans", {"CEL"})]
    sub = recall_by_sublabel({"p0": "ProTrans"}, annotations)
    sub_text = render_sublabel_text(sub, "fixture-run")
    assert "Proportion of Sample" in sub_text
    agreement = cohen_kappa({"1": "A", "2": "B"}, {"1": "A", "2": "A"})
    ag_text = render_agreement_text(agreement, reference=0.64)
    assert "reference" in ag_text
