import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from infospec import __version__
from infospec.classical import FiniteMeasure
from infospec.errors import InputError
from infospec.io import (
    config_hash,
    csv_text,
    format_value,
    json_text,
    load_input,
    measure_from_dict,
    measure_to_dict,
    operator_from_dict,
    operator_to_dict,
    read_csv,
    spectrum_rows,
)
from infospec.classical import iid_spectrum


class TestOperators:
    def test_round_trip_complex(self):
        a = np.array([[0.6, 0.1 - 0.2j], [0.1 + 0.2j, 0.4]])
        d = operator_to_dict(a)
        assert set(d) == {"dim", "re", "im"}
        assert_allclose(operator_from_dict(json.loads(json.dumps(d))), a)

    def test_real_has_no_im(self):
        assert "im" not in operator_to_dict(np.eye(2))

    def test_small_asymmetry_is_symmetrized(self):
        a = operator_from_dict({"dim": 2, "re": [[1, 0.5 + 1e-11], [0.5, 1]]})
        assert a[0, 1] == a[1, 0]

    @pytest.mark.parametrize(
        "bad",
        [
            {"dim": 2},
            {"dim": 3, "re": [[1, 0], [0, 1]]},
            {"dim": 2, "re": [[1, 0], [0, 1]], "im": [[0]]},
            {"dim": 2, "re": [["x", 0], [0, 1]]},
            {"dim": 2, "re": [[1, 0.1], [0, 1]]},
        ],
    )
    def test_rejects(self, bad):
        with pytest.raises(InputError):
            operator_from_dict(bad)


class TestMeasures:
    def test_round_trip(self):
        m = FiniteMeasure([0.25, 0.75])
        back = measure_from_dict(measure_to_dict(m))
        assert_allclose(back.weights, m.weights) and back.normalized

    def test_unnormalized(self):
        assert not measure_from_dict({"weights": [1, 1, 1], "normalized": False}).normalized
        with pytest.raises(InputError):
            measure_from_dict({"weights": [1, 1, 1]})

    def test_load_dispatch(self, tmp_path):
        p, q = tmp_path / "m.json", tmp_path / "o.json"
        p.write_text('{"weights": [0.5, 0.5]}')
        q.write_text('{"dim": 1, "re": [[1]]}')
        assert isinstance(load_input(p), FiniteMeasure)
        assert load_input(q).shape == (1, 1)

    def test_load_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(InputError, match="not valid JSON"):
            load_input(bad)
        with pytest.raises(InputError, match="cannot read"):
            load_input(tmp_path / "missing.json")


class TestEmission:
    def test_format(self):
        assert [format_value(x) for x in (math.inf, -math.inf, math.nan, True, 3)] == ["inf", "-inf", "nan", "true", "3"]
        assert float(format_value(0.1)) == 0.1

    def test_csv_provenance_and_round_trip(self):
        cfg = {"n": [5], "mode": "strict"}
        text = csv_text(["n", "value"], [(5, 1 / 3), (6, -math.inf)], cfg)
        comment, header, rows = read_csv(text)
        assert comment == f"# infospec {__version__} config {config_hash(cfg)}"
        assert header == ["n", "value"]
        assert float(rows[0][1]) == 1 / 3 and rows[1][1] == "-inf"

    def test_hash_is_order_free(self):
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert config_hash({"a": 1}) != config_hash({"a": 2})

    def test_json_is_standard(self):
        text = json_text({"x": math.inf, "y": np.float64(0.5), "z": np.arange(2)}, {"k": 1})
        body = json.loads(text)
        assert body["x"] == "inf" and body["y"] == 0.5 and body["z"] == [0, 1]
        assert body["version"] == __version__ and len(body["config_hash"]) == 16

    def test_read_csv_needs_comment(self):
        with pytest.raises(InputError):
            read_csv("a,b\n1,2\n")

    def test_spectrum_rows(self):
        spec = iid_spectrum(FiniteMeasure([0.5, 0.5]), FiniteMeasure([0.9, 0.1]), 2)
        rows = spectrum_rows(spec)
        assert len(rows) == 3 and sum(r[2] for r in rows) == pytest.approx(1.0)
