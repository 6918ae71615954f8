import os

from herdmarket_plots.cli import main
from herdmarket_plots.figures import FIGURES


def test_single_figure(tiny_bundles, tmp_path, capsys):
    out = tmp_path / "figs"
    rc = main([
        "--bundle", tiny_bundles["ref-tt"],
        "--bundle", tiny_bundles["ref-ft"],
        "--fig", "fig2a", "--out", str(out),
    ])
    captured = capsys.readouterr()
    assert rc == 0
    assert "wrote" in captured.out
    assert (out / "fig2a.png").stat().st_size > 0


def test_all_figures(tiny_bundles, tmp_path, capsys):
    args = ["--fig", "all", "--out", str(tmp_path / "figs")]
    for path in tiny_bundles.values():
        args += ["--bundle", path]
    rc = main(args)
    captured = capsys.readouterr()
    assert rc == 0
    written = sorted(os.listdir(tmp_path / "figs"))
    assert written == sorted(f"{fig_id}.png" for fig_id in FIGURES)
    assert len(captured.out.splitlines()) == len(FIGURES)


def test_unknown_figure_id(tiny_bundles, tmp_path, capsys):
    rc = main([
        "--bundle", tiny_bundles["ref-tt"],
        "--fig", "fig99", "--out", str(tmp_path),
    ])
    captured = capsys.readouterr()
    assert rc == 2
    assert captured.err.startswith("error:")
    assert "fig99" in captured.err


def test_not_a_bundle(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = main(["--bundle", str(empty), "--fig", "fig1a", "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert rc == 2
    assert "error:" in captured.err
    assert "no bundles" in captured.err or "not a bundle" in captured.err


def test_missing_input_reported(tiny_bundles, tmp_path, capsys):
    rc = main([
        "--bundle", tiny_bundles["ref-tt"],
        "--fig", "fig2a", "--out", str(tmp_path),
    ])
    captured = capsys.readouterr()
    assert rc == 2
    assert "tax=flat" in captured.err


def test_twin_bundle_carries_its_figures(tiny_bundles, tmp_path, capsys):
    # a twin directory alone provides reference, focal, and graph inputs
    out = tmp_path / "figs"
    for fig_id in ("fig8", "fig4b", "graph"):
        rc = main([
            "--bundle", tiny_bundles["twin-tt"],
            "--fig", fig_id, "--out", str(out),
        ])
        assert rc == 0, capsys.readouterr().err
        assert (out / f"{fig_id}.png").exists()
