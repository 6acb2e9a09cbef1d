import json

import numpy as np
import pytest

import treecast.io as tio
from treecast import Hierarchy, build_structure_matrix
from treecast.cli import main
from treecast.errors import ValidationError
from treecast.metrics import RepResult

from conftest import fig_hierarchy


def write_wide(path, labels, rows):
    with open(path, "w") as fh:
        fh.write(",".join(labels) + "\n")
        for row in rows:
            fh.write(",".join("" if np.isnan(x) else f"{x:.10g}" for x in row) + "\n")


@pytest.fixture
def sample_files(tmp_path):
    h = fig_hierarchy()
    rng = np.random.default_rng(0)
    hpath = tmp_path / "h.json"
    tio.write_hierarchy_json(hpath, h)
    fpath = tmp_path / "f.csv"
    write_wide(fpath, h.labels, rng.standard_normal((3, 8)))
    rpath = tmp_path / "r.csv"
    write_wide(rpath, h.labels, rng.standard_normal((40, 8)))
    return h, hpath, fpath, rpath


class TestHierarchyFormats:
    def test_json_round_trip(self):
        h = fig_hierarchy()
        d = tio.hierarchy_to_json_dict(h)
        assert d["label"] == "T"
        back = tio.hierarchy_from_json_dict(d)
        assert back.labels == h.labels
        assert back.parents == h.parents

    def test_edge_list_with_and_without_header(self, tmp_path):
        text = "child,parent\nA,T\nB,T\nAA,A\nAB,A\n"
        p = tmp_path / "edges.csv"
        p.write_text(text)
        h = tio.load_hierarchy(p)
        assert h.labels == ("T", "A", "B", "AA", "AB")
        p.write_text("A,T\nB,T\nAA,A\nAB,A\n")
        h2 = tio.load_hierarchy(p)
        assert h2.labels == h.labels

    def test_edge_list_root_row_with_empty_parent(self, tmp_path):
        p = tmp_path / "edges.csv"
        p.write_text("T,\nA,T\nB,T\n")
        h = tio.load_hierarchy(p)
        assert h.labels == ("T", "A", "B")

    def test_conflicting_parents_rejected(self):
        with pytest.raises(ValidationError):
            tio.hierarchy_from_edge_rows([("A", "T"), ("A", "B"), ("B", "T")])


class TestWideCsv:
    def test_blank_cells_become_nan_and_round_trip(self, tmp_path):
        labels = ("a", "b")
        values = np.array([[np.nan, 1.0], [2.0, 3.0]])
        p = tmp_path / "w.csv"
        tio.write_wide_csv(p, labels, values)
        labels2, values2 = tio.load_wide_csv(p)
        assert labels2 == labels
        assert np.isnan(values2[0, 0])
        np.testing.assert_allclose(values2[1], values[1])

    def test_mislabeled_column_names_the_column(self, sample_files, tmp_path):
        h, _, fpath, _ = sample_files
        text = fpath.read_text().replace("BA", "ZZ")
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(ValidationError, match="ZZ"):
            tio.load_forecast_csv(bad, h)

    def test_column_order_free(self, sample_files, tmp_path):
        h, _, fpath, _ = sample_files
        labels, values = tio.load_wide_csv(fpath)
        perm = list(reversed(range(len(labels))))
        shuffled = tmp_path / "shuffled.csv"
        write_wide(shuffled, tuple(labels[i] for i in perm), values[:, perm])
        a = tio.load_forecast_csv(fpath, h)
        b = tio.load_forecast_csv(shuffled, h)
        np.testing.assert_allclose(a.values, b.values)


class TestRawResults:
    def test_round_trip(self, tmp_path):
        h = fig_hierarchy()
        rng = np.random.default_rng(1)
        reps = [
            RepResult(
                base=np.abs(rng.standard_normal((8, 3))),
                methods={"m1": np.abs(rng.standard_normal((8, 3)))},
            )
            for _ in range(3)
        ]
        path = tmp_path / "raw.csv"
        levels = ("Top-Level",) + ("Level 1",) * 2 + ("Bottom-Level",) * 5
        tio.write_raw_results(path, reps, h.labels, levels, ("h=1", "1:2", "1:4"))
        back, groups, windows = tio.read_raw_results(path)
        assert windows == ("h=1", "1:2", "1:4")
        assert [name for name, _ in groups] == ["Top-Level", "Level 1", "Bottom-Level"]
        for orig, rec in zip(reps, back):
            np.testing.assert_array_equal(orig.base, rec.base)
            np.testing.assert_array_equal(orig.methods["m1"], rec.methods["m1"])


class TestCli:
    def test_reconcile_bu_keeps_bottom_columns(self, sample_files, tmp_path):
        h, hpath, fpath, _ = sample_files
        out = tmp_path / "out.csv"
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(hpath),
                "--forecasts",
                str(fpath),
                "--method",
                "bu",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        labels_in, values_in = tio.load_wide_csv(fpath)
        labels_out, values_out = tio.load_wide_csv(out)
        for lab in ("AA", "AB", "BA", "BB", "BC"):
            np.testing.assert_allclose(
                values_out[:, labels_out.index(lab)],
                values_in[:, labels_in.index(lab)],
                rtol=1e-9,
            )

    def test_reconcile_mint_output_coherent(self, sample_files, tmp_path):
        h, hpath, fpath, rpath = sample_files
        out = tmp_path / "out.csv"
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(hpath),
                "--forecasts",
                str(fpath),
                "--residuals",
                str(rpath),
                "--method",
                "mint",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        labels, values = tio.load_wide_csv(out)
        smat = build_structure_matrix(h)
        panel = values[:, [labels.index(lab) for lab in h.labels]].T
        bottom = panel[[h.labels.index(lab) for lab in smat.col_labels]]
        np.testing.assert_allclose(panel, smat.entries @ bottom, atol=1e-7)

    def test_reconcile_missing_residuals_is_validation_error(
        self, sample_files, tmp_path
    ):
        _, hpath, fpath, _ = sample_files
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(hpath),
                "--forecasts",
                str(fpath),
                "--method",
                "mint",
                "--out",
                str(tmp_path / "o.csv"),
            ]
        )
        assert rc == 2

    def test_reconcile_mintit_writes_diagnostics(self, sample_files, tmp_path):
        _, hpath, fpath, rpath = sample_files
        out = tmp_path / "out.csv"
        diag = tmp_path / "diag.json"
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(hpath),
                "--forecasts",
                str(fpath),
                "--residuals",
                str(rpath),
                "--method",
                "mintit-l",
                "--out",
                str(out),
                "--diagnostics",
                str(diag),
                "--mintit-eps",
                "1e-9",
            ]
        )
        assert rc == 0
        payload = json.loads(diag.read_text())
        assert payload["converged"] is True
        assert payload["iterations"] == len(payload["change_norms"])
        assert payload["change_norms"][-1] < 1e-9

    def test_simulate_deterministic_and_report_rebuild(self, tmp_path):
        out1 = tmp_path / "r1.csv"
        out2 = tmp_path / "r2.csv"
        raw = tmp_path / "raw.csv"
        args = [
            "simulate",
            "--scenario",
            "corr",
            "--T",
            "15",
            "--reps",
            "6",
            "--seed",
            "11",
            "--base",
            "naive",
        ]
        assert main(args + ["--out", str(out1), "--dump-raw", str(raw)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        rebuilt = tmp_path / "r3.csv"
        assert main(["report", "--raw", str(raw), "--out", str(rebuilt)]) == 0
        assert rebuilt.read_bytes() == out1.read_bytes()

    def test_simulate_rejects_bad_reps(self, tmp_path):
        rc = main(
            [
                "simulate",
                "--scenario",
                "corr",
                "--T",
                "15",
                "--reps",
                "0",
                "--out",
                str(tmp_path / "x.csv"),
            ]
        )
        assert rc == 2

    def test_simulate_report_structure(self, tmp_path):
        out = tmp_path / "rep.csv"
        rc = main(
            [
                "simulate",
                "--scenario",
                "corr",
                "--T",
                "15",
                "--reps",
                "5",
                "--seed",
                "1",
                "--base",
                "mean",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        # header + 6 methods x (4 levels + average)
        assert len(lines) == 1 + 6 * 5
        assert lines[0] == "level,method,h=1,1:2,1:4,average"

    def test_bundled_sample_data_bu_and_mint(self, tmp_path):
        from pathlib import Path

        root = Path(__file__).resolve().parent.parent / "sample_data"
        h = tio.load_hierarchy(root / "hierarchy.json")
        edges = tio.load_hierarchy(root / "hierarchy_edges.csv")
        assert edges.labels == h.labels

        out = tmp_path / "bu.csv"
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(root / "hierarchy.json"),
                "--forecasts",
                str(root / "base_forecasts.csv"),
                "--method",
                "bu",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        labels_in, values_in = tio.load_wide_csv(root / "base_forecasts.csv")
        labels_out, values_out = tio.load_wide_csv(out)
        smat = build_structure_matrix(h)
        for lab in smat.col_labels:
            np.testing.assert_allclose(
                values_out[:, labels_out.index(lab)],
                values_in[:, labels_in.index(lab)],
                rtol=1e-9,
            )

        out2 = tmp_path / "mint.csv"
        rc = main(
            [
                "reconcile",
                "--hierarchy",
                str(root / "hierarchy_edges.csv"),
                "--forecasts",
                str(root / "base_forecasts.csv"),
                "--residuals",
                str(root / "residuals.csv"),
                "--method",
                "mint",
                "--out",
                str(out2),
            ]
        )
        assert rc == 0
        labels, values = tio.load_wide_csv(out2)
        panel = values[:, [labels.index(lab) for lab in h.labels]].T
        bottom = panel[[h.labels.index(lab) for lab in smat.col_labels]]
        np.testing.assert_allclose(panel, smat.entries @ bottom, atol=1e-7)

    def test_dump_panels_writes_per_rep_csvs(self, tmp_path):
        panels_dir = tmp_path / "panels"
        rc = main(
            [
                "simulate",
                "--scenario",
                "corr",
                "--T",
                "15",
                "--reps",
                "3",
                "--base",
                "naive",
                "--out",
                str(tmp_path / "rep.csv"),
                "--dump-panels",
                str(panels_dir),
            ]
        )
        assert rc == 0
        files = sorted(panels_dir.iterdir())
        assert [f.name for f in files] == [
            "rep_00000.csv",
            "rep_00001.csv",
            "rep_00002.csv",
        ]
        labels, values = tio.load_wide_csv(files[0])
        assert values.shape == (15, 15)

    def test_json_and_table_formats(self, tmp_path):
        for fmt, probe in (("json", "{"), ("table", "-- Top-Level --")):
            out = tmp_path / f"rep.{fmt}"
            rc = main(
                [
                    "simulate",
                    "--scenario",
                    "smooth",
                    "--T",
                    "15",
                    "--reps",
                    "3",
                    "--base",
                    "naive",
                    "--out",
                    str(out),
                    "--format",
                    fmt,
                ]
            )
            assert rc == 0
            assert out.read_text().lstrip().startswith(probe)
