"""Tests for tabular report views."""

from capfi.core.importance import compute_cross
from capfi.data.subsets import BASE_NOTATIONS, build_subsets
from capfi.report.tables import baseline_frame, cardinality_table, cross_frame, format_table


def test_cardinality_table_order(small_manifest):
    frame = cardinality_table(build_subsets(small_manifest))
    assert list(frame["notation"]) == list(BASE_NOTATIONS)
    counts = dict(zip(frame["notation"], frame["cardinality"]))
    assert counts["S_C"] == 3
    assert counts["S_Stopped"] == 2
    assert frame["group"].iloc[0] == "Crossing State"


def test_baseline_frame_columns():
    frame = baseline_frame(
        [{"model": "m", "context": "S_C", "n": 3, "positives": 3, "negatives": 0, "acc": 1.0, "auc": None,
          "f1": 1.0, "f1_degenerate": False}]
    )
    assert list(frame.columns)[:3] == ["model", "context", "n"]
    assert frame["auc"].isna().all()


def test_cross_frame_and_format(small_manifest, layout_for, blind_oracle):
    oracle = blind_oracle(layout_for(small_manifest), ignore=["speed"])
    subsets = build_subsets(small_manifest)
    result = compute_cross(oracle, small_manifest, "speed", subsets["S_NC"], subsets["S_C"], seed=1)
    frame = cross_frame([result], ["acc", "auc"])
    assert frame.loc[0, "delta_acc"] == 0.0
    assert frame.loc[0, "source"] == "S_NC"
    assert "acc_baseline" in frame.columns and "auc_permuted" in frame.columns
    text = format_table(frame)
    assert "S_NC" in text
    assert format_table(frame.iloc[0:0]) == "(no rows)"
