"""Plotkit renders harness CSVs verbatim and deterministically."""
import math

import pytest

from plotkit import (
    FigureSpec,
    SchemaError,
    plot_regret_curves,
    plot_scatter,
    render_table1,
)
from plotkit.cli import main

PAPER_SHAPED_TABLE = """budget,algo,metric,mean,std_error,num_samples
2,pd1,competitive_ratio,0.805,0.01,200
4,pd1,competitive_ratio,0.832,0.01,200
8,pd1,competitive_ratio,0.849,0.01,200
16,pd1,competitive_ratio,0.861,0.01,200
32,pd1,competitive_ratio,0.870,0.01,200
64,pd1,competitive_ratio,0.879,0.01,200
2,pd2,competitive_ratio,0.759,0.01,200
4,pd2,competitive_ratio,0.807,0.01,200
8,pd2,competitive_ratio,0.836,0.01,200
16,pd2,competitive_ratio,0.854,0.01,200
32,pd2,competitive_ratio,0.867,0.01,200
64,pd2,competitive_ratio,0.878,0.01,200
"""


def write_curve_csv(path, algos=("naive", "pd1", "pd2"), horizon=40, budget=10):
    lines = ["budget,algo,t,mean,std_error,num_samples"]
    scale = {"naive": 3.0, "pd1": 2.0, "pd2": 1.0}
    for algo in algos:
        for t in range(1, horizon + 1):
            mean = scale.get(algo, 1.5) * math.sqrt(t)
            lines.append(f"{budget},{algo},{t},{mean:.6f},{0.1 * math.sqrt(t):.6f},50")
    path.write_text("\n".join(lines) + "\n")


def write_instances_csv(path, pairs, algos=("pd1", "pd2"), budget=10):
    lines = ["budget,algo,instance_id,final_regret,num_replications"]
    for instance_id, (x, y) in enumerate(pairs):
        lines.append(f"{budget},{algos[0]},{instance_id},{x},50")
        lines.append(f"{budget},{algos[1]},{instance_id},{y},50")
    path.write_text("\n".join(lines) + "\n")


class TestRegretCurves:
    def test_renders_and_regenerates_identically(self, tmp_path):
        csv = tmp_path / "curve.csv"
        write_curve_csv(csv)
        out1, out2 = tmp_path / "a.png", tmp_path / "b.png"
        plot_regret_curves(FigureSpec((str(csv),), "regret_curves", str(out1)))
        plot_regret_curves(FigureSpec((str(csv),), "regret_curves", str(out2)))
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.stat().st_size > 1000

    def test_tracks_the_file_not_the_simulation(self, tmp_path):
        csv = tmp_path / "curve.csv"
        write_curve_csv(csv)
        out1 = tmp_path / "orig.png"
        plot_regret_curves(FigureSpec((str(csv),), "regret_curves", str(out1)))
        # perturb one value: the figure must change
        text = csv.read_text().splitlines()
        cols = text[5].split(",")
        cols[3] = str(float(cols[3]) + 5.0)
        text[5] = ",".join(cols)
        csv.write_text("\n".join(text) + "\n")
        out2 = tmp_path / "perturbed.png"
        plot_regret_curves(FigureSpec((str(csv),), "regret_curves", str(out2)))
        assert out1.read_bytes() != out2.read_bytes()

    def test_single_algo_and_budget_filter(self, tmp_path):
        csv = tmp_path / "curve.csv"
        write_curve_csv(csv, algos=("pd2",), budget=30)
        out = tmp_path / "one.png"
        plot_regret_curves(
            FigureSpec((str(csv),), "regret_curves", str(out), budget=30)
        )
        assert out.exists()

    def test_missing_columns_is_schema_error(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("budget,algo,mean\n10,pd1,3.5\n")
        with pytest.raises(SchemaError, match="missing columns"):
            plot_regret_curves(FigureSpec((str(csv),), "regret_curves", "x.png"))


class TestScatter:
    def test_identity_data_renders(self, tmp_path):
        csv = tmp_path / "inst.csv"
        write_instances_csv(csv, [(3.0, 3.0), (5.0, 5.0), (7.5, 7.5)])
        out = tmp_path / "scatter.png"
        plot_scatter(FigureSpec((str(csv),), "scatter", str(out), algos=("pd1", "pd2")))
        assert out.exists()

    def test_regenerates_identically(self, tmp_path):
        csv = tmp_path / "inst.csv"
        write_instances_csv(csv, [(4.0, 2.0), (6.0, 3.0), (9.0, 8.0)])
        outs = [tmp_path / "s1.png", tmp_path / "s2.png"]
        for out in outs:
            plot_scatter(
                FigureSpec((str(csv),), "scatter", str(out), algos=("pd1", "pd2"))
            )
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_unpaired_instances_rejected(self, tmp_path):
        csv = tmp_path / "inst.csv"
        lines = [
            "budget,algo,instance_id,final_regret,num_replications",
            "10,pd1,0,3.0,50",
            "10,pd1,1,4.0,50",
            "10,pd2,0,2.0,50",
        ]
        csv.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError, match="unpaired"):
            plot_scatter(
                FigureSpec((str(csv),), "scatter", "x.png", algos=("pd1", "pd2"))
            )

    def test_empty_input_renders_empty_axes(self, tmp_path):
        csv = tmp_path / "inst.csv"
        csv.write_text("budget,algo,instance_id,final_regret,num_replications\n")
        out = tmp_path / "empty.png"
        code = main(["scatter", "--in", str(csv), "--out", str(out),
                     "--algos", "pd1,pd2"])
        assert code == 0
        assert out.exists()


class TestTable:
    def test_paper_shaped_grid(self, tmp_path):
        csv = tmp_path / "table1.csv"
        csv.write_text(PAPER_SHAPED_TABLE)
        out = tmp_path / "table.txt"
        text = render_table1(FigureSpec((str(csv),), "table", str(out)))
        lines = text.strip().splitlines()
        assert len(lines) == 3  # header + 2 algorithm rows
        header = lines[0].split()
        assert header == ["algo", "2", "4", "8", "16", "32", "64"]
        pd1 = lines[1].split()
        assert pd1[0] == "pd1"
        assert pd1[1:] == ["0.805", "0.832", "0.849", "0.861", "0.870", "0.879"]
        pd2 = lines[2].split()
        assert pd2[1:] == ["0.759", "0.807", "0.836", "0.854", "0.867", "0.878"]
        assert out.read_text() == text

    def test_single_budget_grid(self, tmp_path):
        csv = tmp_path / "one.csv"
        csv.write_text(
            "budget,algo,metric,mean,std_error,num_samples\n"
            "2,pd1,competitive_ratio,0.8054,0.01,5\n"
            "2,pd2,competitive_ratio,0.7,0.01,5\n"
        )
        out = tmp_path / "t.txt"
        text = render_table1(FigureSpec((str(csv),), "table", str(out)))
        lines = text.strip().splitlines()
        assert len(lines) == 3
        assert lines[1].split()[1] == "0.805"  # three-decimal rounding

    def test_ignores_other_metrics(self, tmp_path):
        csv = tmp_path / "mixed.csv"
        csv.write_text(
            "budget,algo,metric,mean,std_error,num_samples\n"
            "2,pd1,competitive_ratio,0.8,0.01,5\n"
            "2,pd1,final_regret,55.0,0.5,5\n"
        )
        text = render_table1(FigureSpec((str(csv),), "table", str(tmp_path / "t.txt")))
        assert "55" not in text


class TestCli:
    def test_regret_command(self, tmp_path):
        csv = tmp_path / "curve.csv"
        write_curve_csv(csv)
        out = tmp_path / "fig.png"
        assert main(["regret", "--in", str(csv), "--out", str(out)]) == 0
        assert out.exists()

    def test_schema_error_exit_code(self, tmp_path):
        csv = tmp_path / "bad.csv"
        csv.write_text("nope\n1\n")
        assert main(["regret", "--in", str(csv), "--out", str(tmp_path / "x.png")]) == 2

    def test_table_command(self, tmp_path):
        csv = tmp_path / "table1.csv"
        csv.write_text(PAPER_SHAPED_TABLE)
        out = tmp_path / "table.txt"
        assert main(["table", "--in", str(csv), "--out", str(out)]) == 0
        assert "0.805" in out.read_text()
