import numpy as np
import pytest

from lpad.core.base import Mode
from lpad.core.exceptions import ShapeError
from lpad.diffcore.tensor import no_grad
from lpad.nets.config import DecoderOutput, HeadKind, NetConfig
from lpad.nets.decoder import build_decoder, decode
from lpad.nets.encoder import build_encoder, encode
from lpad.nets.heads import BernoulliPosterior, GaussianPosterior
from tests.conftest import tiny_net


def _zero_linear(layer):
    layer.weight.data[...] = 0.0
    layer.bias.data[...] = 0.0


class TestEncoder:
    def test_gaussian_head_of_size_256(self, rng):
        cfg = NetConfig(in_channels=7, window_len=64, latent_dim=256, head_kind=HeadKind.GAUSSIAN)
        net = build_encoder(cfg).set_mode(Mode.EVAL)
        with no_grad():
            head = encode(net, rng.normal(size=(2, 7, 64)))
        assert isinstance(head, GaussianPosterior)
        assert head.mu.shape == (2, 256)
        assert head.logvar.shape == (2, 256)

    def test_bernoulli_head_of_size_64(self, rng):
        cfg = NetConfig(in_channels=7, window_len=64, latent_dim=64, head_kind=HeadKind.BERNOULLI)
        net = build_encoder(cfg).set_mode(Mode.EVAL)
        with no_grad():
            head = encode(net, rng.normal(size=(2, 7, 64)))
        assert isinstance(head, BernoulliPosterior)
        assert head.log_alpha.shape == (2, 64)

    def test_zero_gaussian_head(self, rng):
        net = build_encoder(tiny_net(HeadKind.GAUSSIAN))
        _zero_linear(net.head.mu)
        _zero_linear(net.head.logvar)
        head = encode(net, rng.normal(size=(3, 2, 8)))
        np.testing.assert_array_equal(head.mu.data, np.zeros((3, 4)))
        np.testing.assert_allclose(head.logvar.data, np.full((3, 4), np.log(2.0)))

    def test_zero_bernoulli_head(self, rng):
        net = build_encoder(tiny_net(HeadKind.BERNOULLI))
        _zero_linear(net.head.log_alpha)
        head = encode(net, rng.normal(size=(3, 2, 8)))
        np.testing.assert_array_equal(head.log_alpha.data, np.zeros((3, 4)))

    def test_logvar_without_softplus_can_be_negative(self, rng):
        net = build_encoder(tiny_net(HeadKind.GAUSSIAN, logvar_softplus=False))
        net.head.logvar.bias.data[...] = -3.0
        net.head.logvar.weight.data[...] = 0.0
        head = encode(net, rng.normal(size=(1, 2, 8)))
        np.testing.assert_array_equal(head.logvar.data, np.full((1, 4), -3.0))

    def test_batch_order_is_preserved(self, rng):
        net = build_encoder(tiny_net(branches=[(3, 3), (2, 5)])).set_mode(Mode.EVAL)
        x = rng.normal(size=(4, 2, 8))
        batched = encode(net, x).mu.data
        for i in range(4):
            np.testing.assert_allclose(encode(net, x[i : i + 1]).mu.data[0], batched[i], atol=1e-12)

    def test_same_rng_seed_gives_same_weights(self):
        first = build_encoder(tiny_net(), np.random.default_rng(4))
        second = build_encoder(tiny_net(), np.random.default_rng(4))
        for (name, a), (_, b) in zip(first.named_parameters(), second.named_parameters()):
            np.testing.assert_array_equal(a.data, b.data, err_msg=name)

    @pytest.mark.parametrize("shape", [(3, 2, 7), (3, 3, 8), (2, 8)])
    def test_wrong_input_shape(self, shape):
        with pytest.raises(ShapeError) as exc_info:
            encode(build_encoder(tiny_net()), np.zeros(shape))
        assert exc_info.value.op == "encode"


class TestDecoder:
    def test_zero_latent_with_sigmoid_gives_one_half(self):
        cfg = tiny_net(decoder_output=DecoderOutput.SIGMOID, blocks_per_branch=2)
        net = build_decoder(cfg).set_mode(Mode.EVAL)
        out = decode(net, np.zeros((2, cfg.latent_dim)))
        np.testing.assert_array_equal(out.data, np.full((2, 2, 8), 0.5))

    def test_round_trip_shape(self, rng):
        cfg = NetConfig(in_channels=10, window_len=160, latent_dim=32)
        encoder = build_encoder(cfg).set_mode(Mode.EVAL)
        decoder = build_decoder(cfg).set_mode(Mode.EVAL)
        with no_grad():
            head = encode(encoder, rng.normal(size=(2, 10, 160)))
            out = decode(decoder, head.mu)
        assert out.shape == (2, 10, 160)

    def test_linear_output_is_unbounded_logits(self, rng):
        net = build_decoder(tiny_net())
        z = rng.normal(size=(3, 4)) * 5.0
        np.testing.assert_array_equal(decode(net, z).data, net.logits(z).data)

    def test_sigmoid_output_is_activated_logits(self, rng):
        net = build_decoder(tiny_net(decoder_output=DecoderOutput.SIGMOID)).set_mode(Mode.EVAL)
        z = rng.normal(size=(3, 4))
        logits = net.logits(z).data
        np.testing.assert_allclose(decode(net, z).data, 1.0 / (1.0 + np.exp(-logits)))

    def test_wrong_latent_width(self):
        with pytest.raises(ShapeError) as exc_info:
            decode(build_decoder(tiny_net()), np.zeros((2, 5)))
        assert exc_info.value.op == "decode"


def test_train_mode_updates_running_stats_only_in_train(rng):
    net = build_encoder(tiny_net())
    before = {name: value.copy() for name, value in net.named_buffers()}
    net.set_mode(Mode.EVAL)
    encode(net, rng.normal(size=(4, 2, 8)))
    for name, value in net.named_buffers():
        np.testing.assert_array_equal(value, before[name])
    net.set_mode(Mode.TRAIN)
    encode(net, rng.normal(loc=2.0, size=(4, 2, 8)))
    changed = [not np.array_equal(value, before[name]) for name, value in net.named_buffers()]
    assert any(changed)
