import numpy as np
import orjson
import pandas as pd
import pytest

from ere.core.errors import ConfigurationError, IngestError, OutputError
from ere.handlers import get_commands_parser
from ere.main import main
from ere.schemas import AnalysisReport, BicTracePoint, ModalityMap, ScreenColumn, ScreenReport
from ere.sim.coverage import write_csv
from ere.sim.models import SimModel
from ere.sim.synthetic import write_synthetic
from ere.utils.ingest import ingest, load_modality_map


@pytest.fixture
def synthetic(tmp_path):
    model = SimModel.preset(1, 2.0, n=300, p=60)
    csv_path, map_path = tmp_path / "data.csv", tmp_path / "modalities.json"
    write_synthetic(model, 0, csv_path, map_path)
    return csv_path, map_path


def _write_map(path, response: str, modalities: dict[str, list[str]]):
    payload = {"response": response, "modalities": [{"name": k, "columns": v} for k, v in modalities.items()]}
    path.write_bytes(orjson.dumps(payload))
    return path


def test_infer_writes_report(synthetic, tmp_path):
    csv_path, map_path = synthetic
    out = tmp_path / "report.json"
    code = main(["infer", "--data", str(csv_path), "--config", str(map_path), "--out", str(out)])
    assert code == 0
    report = AnalysisReport.from_json(out.read_bytes())
    assert [item.modality for item in report.modalities] == ["mod1", "mod2", "mod3"]
    assert (report.n, report.p) == (300, 60)
    for item in report.modalities:
        assert item.h_hat >= 0
        assert 0 <= item.p_value <= 1
        assert item.ci_lower <= item.h_hat <= item.ci_upper
        assert item.r2_ci_lower <= item.r2_hat <= item.r2_ci_upper
    assert report.to_json() == out.read_bytes()


def test_infer_is_deterministic(synthetic, tmp_path):
    csv_path, map_path = synthetic
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for out in (first, second):
        args = ["infer", "--data", str(csv_path), "--config", str(map_path), "--modality", "mod1", "--out", str(out)]
        assert main(args) == 0
    assert first.read_bytes() == second.read_bytes()


def test_infer_one_sided_has_open_upper_bound(synthetic, tmp_path):
    csv_path, map_path = synthetic
    out = tmp_path / "report.json"
    args = ["infer", "--data", str(csv_path), "--config", str(map_path), "--modality", "mod2", "--one-sided"]
    assert main([*args, "--out", str(out)]) == 0
    item = AnalysisReport.from_json(out.read_bytes()).modalities[0]
    assert item.ci_upper is None
    assert item.r2_ci_upper == 1.0


def test_missing_column_is_configuration_error(synthetic, tmp_path):
    csv_path, _ = synthetic
    map_path = _write_map(tmp_path / "bad.json", "y", {"mod1": ["x1", "x2"], "mod2": ["x3", "nope"]})
    assert main(["infer", "--data", str(csv_path), "--config", str(map_path)]) == 2


def test_unknown_target_modality(synthetic):
    csv_path, map_path = synthetic
    assert main(["infer", "--data", str(csv_path), "--config", str(map_path), "--modality", "mod9"]) == 2


def test_missing_value_is_data_error(synthetic, tmp_path):
    csv_path, map_path = synthetic
    frame = pd.read_csv(csv_path, dtype=str)
    frame.loc[4, "x7"] = "NA"
    broken = tmp_path / "broken.csv"
    frame.to_csv(broken, index=False)
    assert main(["infer", "--data", str(broken), "--config", str(map_path)]) == 3

    with pytest.raises(IngestError, match="строка 6"):
        ingest(broken, load_modality_map(map_path), SimModel.preset(1).family)


def test_screened_out_modality(tmp_path):
    rng = np.random.default_rng(5)
    n = 200
    X = rng.standard_normal((n, 4))
    y = 2.0 * X[:, 0] + 2.0 * X[:, 1] + rng.standard_normal(n)
    frame = pd.DataFrame(X, columns=["a", "b", "c", "d"])
    frame["y"] = y
    frame.to_csv(tmp_path / "data.csv", index=False)
    map_path = _write_map(tmp_path / "map.json", "y", {"signal": ["a", "b"], "noise": ["c", "d"]})
    out = tmp_path / "report.json"

    args = ["infer", "--data", str(tmp_path / "data.csv"), "--config", str(map_path), "--threshold", "1.0"]
    assert main([*args, "--modality", "noise", "--out", str(out)]) == 0
    item = AnalysisReport.from_json(out.read_bytes()).modalities[0]
    assert item.screened_out
    assert item.h_hat == 0.0
    assert item.p_value == 1.0
    assert item.s_tilde_m == 0


def test_screen_command(synthetic, tmp_path, capsys):
    csv_path, map_path = synthetic
    out = tmp_path / "screen.json"
    assert main(["screen", "--data", str(csv_path), "--config", str(map_path), "--top", "5", "--out", str(out)]) == 0
    report = ScreenReport.model_validate(orjson.loads(out.read_bytes()))
    assert report.p == 60
    assert len(report.columns) == 60
    assert sum(report.s_tilde_by_modality.values()) == report.s_tilde
    magnitudes = [abs(column.mmle) for column in report.columns]
    assert magnitudes == sorted(magnitudes, reverse=True)
    assert "gamma_n" in capsys.readouterr().out


def test_simulate_command(tmp_path):
    out = tmp_path / "coverage.csv"
    args = ["simulate", "--model", "1", "--reps", "1", "--delta", "1", "--small", "--method", "oracle"]
    assert main([*args, "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 3
    assert set(frame["method"]) == {"oracle"}


def test_simulate_unknown_method():
    assert main(["simulate", "--model", "1", "--reps", "1", "--small", "--method", "lasso"]) == 2


def test_ingest_small_table(tmp_path, gaussian):
    (tmp_path / "toy.csv").write_text("a,b,y\n1,2,0.5\n3,4,1.5\n5,7,2.0\n", encoding="utf-8")
    modality_map = ModalityMap.model_validate({"response": "y", "modalities": [{"name": "m", "columns": ["a", "b"]}]})
    data, partition = ingest(tmp_path / "toy.csv", modality_map, gaussian, standardize=False)
    assert (data.n, data.p) == (3, 2)
    assert partition.M == 1
    assert np.array_equal(data.X[:, 1], [2.0, 4.0, 7.0])


def test_modality_map_validation(tmp_path):
    path = _write_map(tmp_path / "map.json", "y", {"m1": ["a", "b"], "m2": ["b", "c"]})
    with pytest.raises(ConfigurationError):
        load_modality_map(path)
    with pytest.raises(ConfigurationError):
        load_modality_map(tmp_path / "absent.json")


def test_parser_lists_every_command():
    parser = get_commands_parser()
    source = ["--data", "d.csv", "--config", "m.json"]
    for argv in (["infer", *source], ["screen", *source], ["simulate", "--model", "2"]):
        args = parser.parse_args(argv)
        assert args.command == argv[0]
        assert callable(args.handler)
    assert "threshold" in BicTracePoint.model_fields
    assert "mmle" in ScreenColumn.model_fields


def test_unwritable_output_is_configuration_error(synthetic, tmp_path):
    csv_path, map_path = synthetic
    taken = tmp_path / "taken"
    taken.mkdir()
    args = ["infer", "--data", str(csv_path), "--config", str(map_path), "--modality", "mod1", "--out", str(taken)]
    assert main(args) == 2
    assert main(["screen", "--data", str(csv_path), "--config", str(map_path), "--out", str(taken)]) == 2
    sim = ["simulate", "--model", "1", "--reps", "1", "--delta", "1", "--small", "--method", "oracle"]
    assert main([*sim, "--out", str(taken)]) == 2
    with pytest.raises(OutputError):
        write_csv([], taken)


def test_ingest_accepts_byte_order_mark(tmp_path, gaussian):
    (tmp_path / "bom.csv").write_text("\ufeffa,b,y\n1,2,0.5\n3,4,1.5\n5,7,2.0\n", encoding="utf-8")
    modality_map = ModalityMap.model_validate({"response": "y", "modalities": [{"name": "m", "columns": ["a", "b"]}]})
    data, _ = ingest(tmp_path / "bom.csv", modality_map, gaussian, standardize=False)
    assert data.column_names == ("a", "b")
    assert np.array_equal(data.X[:, 0], [1.0, 3.0, 5.0])
