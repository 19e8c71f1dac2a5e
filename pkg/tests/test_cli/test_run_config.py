from pathlib import Path

import pytest

from lpad.cli.config import PROFILES, build_config, parse_config
from lpad.core.exceptions import ConfigurationError, UnknownKeyError
from lpad.datapipe.dataset import NormMode
from lpad.datapipe.synth import AnomalyKind
from lpad.vae.spec import PriorKind, ReconMetric


def write_config(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


class TestProfiles:
    def test_baseline_rbm(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, "profile = baseline-rbm\nseed = 1\n"))
        assert cfg.prior == PriorKind.RBM
        assert (cfg.latent_dim, cfg.beta, cfg.lam, cfg.chains, cfg.sweeps) == (64, 60, 0.1, 500, 20)
        assert (cfg.epochs, cfg.minibatch, cfg.lr) == (400, 128, 3e-4)

    def test_approach_rbm(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, "profile = approach-rbm\nseed = 1\n"))
        assert (cfg.latent_dim, cfg.beta, cfg.sweeps) == (32, 30, 25)
        assert cfg.recon_metric == ReconMetric.BCE
        assert cfg.norm_mode == NormMode.MINMAX
        assert cfg.synth_anomaly_kind == AnomalyKind.DELAYED_STEP

    def test_keys_override_the_profile(self, tmp_path):
        cfg = parse_config(write_config(tmp_path, "profile = baseline-rbm\nbeta = 25\nseed = 3\n"))
        assert cfg.beta == 25
        assert cfg.latent_dim == 64

    @pytest.mark.parametrize("profile", sorted(PROFILES))
    def test_every_profile_is_valid(self, profile):
        cfg = build_config({"profile": profile, "seed": "0"})
        spec = cfg.model_spec(cfg.synth_channels, cfg.synth_window_len)
        assert spec.prior_kind == cfg.prior

    def test_unknown_profile(self):
        with pytest.raises(ConfigurationError):
            build_config({"profile": "nope", "seed": "0"})


class TestParsing:
    def test_comments_blank_lines_and_lists(self, tmp_path):
        text = "# a run\n\nseed = 4  # trailing\nsplit = 0.5, 0.3, 0.2\nbranches = 4:3, 4:5\nlambda = 0.5\n"
        cfg = parse_config(write_config(tmp_path, text))
        assert cfg.seed == 4
        assert cfg.split == (0.5, 0.3, 0.2)
        assert [(b.filters, b.kernel) for b in cfg.branches] == [(4, 3), (4, 5)]
        assert cfg.lam == 0.5

    def test_unknown_key_is_named(self, tmp_path):
        with pytest.raises(UnknownKeyError) as exc_info:
            parse_config(write_config(tmp_path, "seed = 1\nbata = 10\n"))
        assert "unknown key 'bata'" in str(exc_info.value)
        assert exc_info.value.key == "bata"

    def test_seed_is_required(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, "beta = 10\n"))
        assert "seed" in str(exc_info.value)

    def test_duplicate_key(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, "seed = 1\nbeta = 2\nbeta = 3\n"))
        assert "given twice" in str(exc_info.value)

    def test_line_without_equals(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, "seed = 1\nbeta\n"))
        assert ":2:" in str(exc_info.value)

    @pytest.mark.parametrize(
        "line,key",
        [
            ("beta = abc", "beta"),
            ("beta = -1", "beta"),
            ("latent_dim = 0", "latent_dim"),
            ("lambda = 0", "lambda"),
            ("prior = laplace", "prior"),
            ("branches = 4", "branches"),
            ("split = 0.7, 0.7", "split"),
            ("dtype = float16", "dtype"),
            ("anomaly_fraction = 1.5", "anomaly_fraction"),
        ],
    )
    def test_invalid_value_names_the_key(self, tmp_path, line, key):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, f"seed = 1\n{line}\n"))
        assert key in str(exc_info.value)

    def test_model_is_checked_at_parse_time(self, tmp_path):
        text = "seed = 1\nprior = rbm\ntopology = bipartite_latent_space\nlatent_dim = 15\n"
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, text))
        assert "latent_dim" in str(exc_info.value)

    def test_missing_data_path(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            parse_config(write_config(tmp_path, f"seed = 1\ndata = {tmp_path / 'absent.csv'}\n"))
        assert "data" in str(exc_info.value)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            parse_config(tmp_path / "absent.cfg")


class TestRunConfig:
    def test_with_overrides_revalidates(self):
        cfg = build_config({"seed": "1"})
        changed = cfg.with_overrides(latent_dim=32, beta=5.0)
        assert (changed.latent_dim, changed.beta) == (32, 5.0)
        assert cfg.latent_dim == 16
        with pytest.raises(ConfigurationError):
            cfg.with_overrides(latent_dim=0)

    def test_repeat_seeds(self):
        cfg = build_config({"seed": "7"})
        assert cfg.train_config(repeat=2).seed == 9
        post = cfg.post_train_config(repeat=1)
        assert (post.epochs, post.minibatch, post.seed) == (300, 32, 8)

    def test_norm_mode_follows_the_metric(self):
        assert build_config({"seed": "1"}).norm_mode == NormMode.ZSCORE
        assert build_config({"seed": "1", "recon_metric": "bce"}).norm_mode == NormMode.MINMAX
        assert build_config({"seed": "1", "norm": "minmax"}).norm_mode == NormMode.MINMAX

    def test_model_spec_pads_the_window(self):
        spec = build_config({"seed": "1"}).model_spec(in_channels=5, window_len=62)
        assert spec.net.window_len == 64
        assert spec.net.in_channels == 5

    def test_snapshot_is_flat_text(self):
        snapshot = build_config({"seed": "1", "branches": "4:3,4:5"}).snapshot()
        assert snapshot["branches"] == "4:3,4:5"
        assert snapshot["split"] == "0.6,0.2,0.2"
        assert snapshot["lambda"] == "0.1"
        assert snapshot["data"] == ""
        assert all(isinstance(value, str) for value in snapshot.values())
