import json
import os

import pytest

from app.datasets import load_bundle
from app.driver import main
from app.harness.runs import read_config, read_summary


@pytest.fixture
def workspace(tmp_path):
    data = str(tmp_path / "data")
    assert main(["gen", "--kind", "gaussians", "--out", data, "--n-per-cell", "10", "--seed", "1"]) == 0
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "epochs": 2,
                "batch_size": 16,
                "latent_dim": 2,
                "hidden_dims": [8],
                "warmup_epochs": 1,
                "kmeans_n_init": 2,
            }
        )
    )
    return tmp_path, data, str(config)


class TestCommands:
    def test_gen(self, workspace):
        _, data, _ = workspace
        bundle = load_bundle(data)
        assert bundle.n == 40
        assert bundle.d_input == 4
        assert bundle.provenance["seed"] == 1

    def test_gen_glyphs(self, tmp_path):
        out = str(tmp_path / "glyphs")
        argv = ["gen", "--kind", "glyphs", "--out", out, "--g", "2", "--k", "3", "--n-per-cell", "1", "--image-size", "16"]
        assert main(argv) == 0
        bundle = load_bundle(out)
        assert (bundle.n, bundle.d_input, bundle.k_clusters) == (6, 256, 3)

    def test_train_eval_report(self, workspace, capsys):
        tmp_path, data, config = workspace
        run = str(tmp_path / "scab")
        assert main(["train", "--data", data, "--out", run, "--config", config, "--eta2", "0.2"]) == 0
        assert read_config(run)["eta2"] == 0.2
        assert read_config(run)["epochs"] == 2
        assert read_summary(run)["data_dir"] == data

        capsys.readouterr()
        assert main(["eval", "--run", run, "--data", data]) == 0
        assert "acc" in capsys.readouterr().out

        csv_path, plot_path = str(tmp_path / "report.csv"), str(tmp_path / "report.svg")
        assert main(["report", run, "--csv", csv_path, "--plot", plot_path]) == 0
        assert "scab" in capsys.readouterr().out
        assert os.path.exists(csv_path)
        assert os.path.exists(plot_path)

        grid = str(tmp_path / "centroids.svg")
        assert main(["centroids", "--run", run, "--out", grid]) == 0
        assert os.path.getsize(grid) > 0

    def test_ablation_flag(self, workspace):
        tmp_path, data, config = workspace
        run = str(tmp_path / "no_clu")
        assert main(["train", "--data", data, "--out", run, "--config", config, "--ablate", "no_clu"]) == 0
        assert read_summary(run)["ablation"] == "no_clu"

    def test_baseline(self, workspace):
        tmp_path, data, config = workspace
        run = str(tmp_path / "ruv_x")
        assert main(["baseline", "--method", "ruv_x", "--data", data, "--out", run, "--config", config]) == 0
        assert read_summary(run)["method"] == "ruv_x"

    def test_propagate(self, workspace):
        tmp_path, data, _ = workspace
        out = str(tmp_path / "propagated")
        assert main(["propagate", "--data", data, "--labeled-ratio", "0.5", "--out", out]) == 0
        bundle = load_bundle(out)
        assert bundle.c.mask is None
        assert bundle.provenance["propagation"]["n_labeled"] == 20


class TestErrors:
    def test_missing_run(self, workspace):
        tmp_path, data, _ = workspace
        assert main(["eval", "--run", str(tmp_path / "absent"), "--data", data]) == 1

    def test_missing_dataset(self, tmp_path):
        assert main(["train", "--data", str(tmp_path / "absent"), "--out", str(tmp_path / "run")]) == 1

    def test_ruv_on_continuous_confound(self, tmp_path):
        data = str(tmp_path / "glyphs")
        argv = ["gen", "--kind", "glyphs-con", "--out", data, "--g", "2", "--n-per-cell", "2", "--image-size", "16"]
        assert main(argv) == 0
        assert main(["baseline", "--method", "ruv_x", "--data", data, "--out", str(tmp_path / "run")]) == 1

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            main(["fit"])
