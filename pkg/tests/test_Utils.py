# -*- coding: utf-8 -*-
import json

import numpy as np
import pytest

from ErgodicRiskLQR.Utils import (Configuration, CsvFile, JsonFile, THREADS_ENV, TimeUtil, ToolboxLogger, config_key,
                                  worker_count)


class TestCsvFile :

    def test_full_precision_and_line_endings(self, tmp_path) :
        path = tmp_path / "x.csv"
        CsvFile.writeFile(str(path), ["t", "value"], [(1, 0.1), (2, np.float64(1.0) / 3.0)])
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.decode().splitlines() == ["t,value", "1,0.10000000000000001", "2,0.33333333333333331"]
        rows = CsvFile.readFile(str(path))
        assert float(rows[2][1]) == 1.0 / 3.0


class TestJsonFile :

    def test_write_read(self, tmp_path) :
        path = str(tmp_path / "x.json")
        JsonFile.writeFile(path, {"K" : [[-0.5]]})
        assert JsonFile.readFile(path) == {"K" : [[-0.5]]}


class TestConfiguration :

    def test_package_defaults(self) :
        assert config_key("CONFIG_SCHEMA") == "ergodic-risk/v1"
        assert config_key("Q_DRIFT_SCALE") > 1.0

    def test_fallback(self) :
        assert Configuration.default().getConfigKey("NOT_A_KEY", 3) == 3

    def test_custom_file(self, tmp_path) :
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"EPSILON" : 1e-6}))
        assert Configuration(str(path)).getConfigKey("EPSILON") == 1e-6

    def test_invalid_file(self, tmp_path) :
        path = tmp_path / "c.json"
        path.write_text("{")
        with pytest.raises(ValueError) :
            Configuration(str(path))


class TestWorkerCount :

    def test_capped(self, monkeypatch) :
        monkeypatch.setenv(THREADS_ENV, "1")
        assert worker_count() == 1

    def test_bad_value_ignored(self, monkeypatch) :
        monkeypatch.setenv(THREADS_ENV, "many")
        assert worker_count() >= 1


class TestLogMethod :

    def test_passes_result_and_reraises(self) :

        @ToolboxLogger.log_method
        def ok(x) :
            return x + 1

        @ToolboxLogger.log_method
        def fails() :
            raise KeyError("boom")

        assert ok(1) == 2
        with pytest.raises(KeyError) :
            fails()
        assert ToolboxLogger._indent() == ""


class TestTimeUtil :

    def test_timer(self) :
        timer = TimeUtil()
        assert timer.stopTimer().total_seconds() >= 0.0
        assert len(TimeUtil.nowCode()) == 14
