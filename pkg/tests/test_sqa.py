"""Three-option QA scoring and free-text choice parsing."""

import pytest

from brainalign.errors import EmptyCorpus, ShapeError, ValidationError
from brainalign.sqa import QAItem, parse_choice, score, validate_qa_set

OPTS = ("a red car", "a blue bus", "nothing of the sort")


def _item(correct=0, probe=False, q="What is shown?"):
    return QAItem(q, OPTS, correct, probe)


def test_qaitem_validation():
    _item()
    with pytest.raises(ValidationError):
        QAItem("", OPTS, 0)
    with pytest.raises(ValidationError):
        QAItem("q", ("a", "b"), 0)
    with pytest.raises(ValidationError):
        QAItem("q", ("same", "same", "other"), 0)
    with pytest.raises(ValidationError):
        QAItem("q", OPTS, 3)
    with pytest.raises(ValidationError):
        QAItem("q", OPTS, True)  # bools are not indices


@pytest.mark.parametrize(
    "response,expected",
    [
        ("A", 0),
        ("b", 1),
        ("C.", 2),
        ("(B)", 1),
        ("B) a blue bus", 1),
        ("The answer is C", 2),
        ("I think it shows option B.", 1),
        ("a red car", 0),
        ("no idea", None),
        ("", None),
        (None, None),
    ],
)
def test_parse_choice_table(response, expected):
    assert parse_choice(response, OPTS) == expected


def test_parse_choice_leading_letter_preempts_containment():
    # a leading letter wins even when the body names a different option;
    # stages are tried in a fixed order, not merged
    assert parse_choice("A... wait, a blue bus!", OPTS) == 0
    assert parse_choice("a blue bus", OPTS) == 0  # article reads as option A


def test_parse_choice_longest_containment_wins():
    options = ("car", "red car")
    assert parse_choice("it is a red car", options) == 1


def test_score_counts_and_split():
    items = [_item(0), _item(1), _item(2, probe=True)]
    result = score(items, ["A", "A", "C"])
    assert result.n_items == 3
    assert result.n_correct == 2
    assert result.accuracy == pytest.approx(100.0 * 2 / 3)
    assert result.n_probe == 1
    assert result.probe_accuracy == pytest.approx(100.0)
    assert result.n_present == 2
    assert result.present_accuracy == pytest.approx(50.0)


def test_score_unparseable_counts_incorrect():
    items = [_item(0)]
    result = score(items, ["gibberish"])
    assert result.n_unparsed == 1
    assert result.n_correct == 0


def test_score_split_none_when_empty():
    result = score([_item(0)], ["A"])
    assert result.probe_accuracy is None
    assert result.n_probe == 0


def test_score_shape_and_empty_errors():
    with pytest.raises(ShapeError):
        score([_item(0)], ["A", "B"])
    with pytest.raises(EmptyCorpus):
        score([], [])


def test_validate_qa_set_warns_on_imbalance():
    items = [_item(0, probe=True), _item(1), _item(2)]
    with pytest.warns(UserWarning, match="unbalanced"):
        n_probe, n_present = validate_qa_set(items)
    assert (n_probe, n_present) == (1, 2)


def test_validate_qa_set_balanced_is_silent():
    items = [_item(0, probe=True), _item(1)]
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert validate_qa_set(items) == (1, 1)
