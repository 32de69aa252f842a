import numpy as np
import pytest

from conftest import tiny_arch
from pqriqa.codec import EncoderConfig, encode_matrix
from pqriqa.errors import (
    InvalidArchitectureError,
    InvalidInputError,
    InvalidParameterError,
    NumericalFailureError,
)
from pqriqa.network import (
    PQR,
    SQR,
    ArchConfig,
    SgdState,
    TrainConfig,
    _forward,
    arch_preset,
    build,
    forward,
    gradient_check,
    loss_and_grad,
    output_gradient,
    predict_patches,
    sgd_step,
    sgd_update,
    train,
)


def zeroed(net):
    net = net.clone()
    for arr in net.params.values():
        arr[...] = 0.0
    return net


class TestArchitecture:

    def test_presets_build(self):
        for name in ("desk", "tiny", "full"):
            arch = arch_preset(name)
            assert build(arch).num_params > 0

    def test_desk_stage_sizes(self):
        assert arch_preset("desk").stage_sizes() == [15, 6, 2, 1]

    def test_full_ends_in_single_cell(self):
        assert arch_preset("full").stage_sizes()[-1] == 1

    def test_too_many_pool_stages(self):
        with pytest.raises(InvalidArchitectureError):
            build(ArchConfig(input_size=32, conv_specs=((3, 4),) * 6))

    def test_pooling_underflow(self):
        with pytest.raises(InvalidArchitectureError):
            build(ArchConfig(input_size=32, conv_specs=((1, 4),) * 7))

    def test_pqr_head_needs_two_anchors(self):
        with pytest.raises(InvalidArchitectureError):
            ArchConfig(head=PQR, m=1)

    def test_sqr_head_ignores_m(self):
        assert ArchConfig(head=SQR, m=1).output_dim == 1

    def test_unknown_preset(self):
        with pytest.raises(InvalidParameterError):
            arch_preset("huge")


class TestBuild:

    def test_same_seed_same_parameters(self):
        a = build(arch_preset("desk"), seed=7)
        b = build(arch_preset("desk"), seed=7)
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_biases_start_at_zero(self, tiny_pqr_net):
        for name, arr in tiny_pqr_net.params.items():
            if name.endswith(".bias"):
                assert not arr.any()

    def test_he_initialization_variance(self):
        arch = ArchConfig(input_size=8, conv_specs=((3, 8), (3, 1400)), fc_width=0, head=SQR)
        w = build(arch, seed=0).params["conv2.weight"]
        assert w.shape == (1400, 8, 3, 3)
        assert np.var(w) == pytest.approx(2.0 / 72, rel=0.05)


class TestForward:

    def test_zero_network_predicts_uniform(self):
        net = zeroed(build(arch_preset("desk"), seed=1))
        q, _ = forward(net, np.zeros((2, 32, 32, 3)))
        np.testing.assert_allclose(q, 0.2, atol=1e-12)

    def test_eval_mode_is_deterministic(self, tiny_pqr_net, rng):
        x = rng.random((5, 8, 8, 3))
        a, _ = forward(tiny_pqr_net, x)
        b, _ = forward(tiny_pqr_net, x)
        assert np.array_equal(a, b)
        np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-12)

    def test_sqr_outputs_scalars(self, tiny_sqr_net, rng):
        y, _ = forward(tiny_sqr_net, rng.random((4, 8, 8, 3)))
        assert y.shape == (4,)

    def test_rejects_wrong_patch_size(self, tiny_pqr_net):
        with pytest.raises(InvalidInputError):
            forward(tiny_pqr_net, np.zeros((1, 9, 9, 3)))

    def test_train_mode_needs_rng(self, tiny_pqr_net):
        with pytest.raises(InvalidParameterError):
            forward(tiny_pqr_net, np.zeros((1, 8, 8, 3)), mode="train")

    def test_dropout_changes_train_outputs(self, tiny_sqr_net, rng):
        x = rng.random((6, 8, 8, 3))
        eval_out, _ = forward(tiny_sqr_net, x)
        train_out, _ = forward(tiny_sqr_net, x, mode="train", dropout_rng=np.random.default_rng(0))
        assert not np.array_equal(eval_out, train_out)

    def test_predict_patches_chunks(self, tiny_pqr_net, rng):
        x = rng.random((7, 8, 8, 3))
        np.testing.assert_allclose(predict_patches(tiny_pqr_net, x, batch_size=3),
                                   forward(tiny_pqr_net, x)[0], rtol=0, atol=1e-12)

    def test_non_finite_activation(self, tiny_sqr_net):
        x = np.full((1, 8, 8, 3), np.inf)
        with pytest.raises(NumericalFailureError) as exc:
            forward(tiny_sqr_net, x)
        assert exc.value.layer == "conv1"


class TestLoss:

    def test_matching_target_has_zero_gradient(self, tiny_pqr_net, rng):
        x = rng.random((3, 8, 8, 3))
        logits, _ = _forward(tiny_pqr_net, x, None)
        q, _ = forward(tiny_pqr_net, x)
        _, grad = output_gradient(tiny_pqr_net.arch, logits, q)
        assert np.max(np.abs(grad)) < 1e-12

    def test_squared_error(self, tiny_sqr_net):
        net = tiny_sqr_net.clone()
        net.params["head.weight"][...] = 0.0
        net.params["head.bias"][...] = 0.7
        loss, _ = loss_and_grad(net, np.zeros((1, 8, 8, 3)), [0.5])
        assert loss == pytest.approx(0.04)

    def test_gradient_keys_match_parameters(self, tiny_pqr_net, rng):
        enc = EncoderConfig()
        _, grads = loss_and_grad(tiny_pqr_net, rng.random((2, 8, 8, 3)), encode_matrix([0.2, 0.9], enc))
        assert list(grads) == list(tiny_pqr_net.params)
        assert all(grads[k].shape == tiny_pqr_net.params[k].shape for k in grads)

    def test_target_count_mismatch(self, tiny_sqr_net):
        with pytest.raises(InvalidParameterError):
            loss_and_grad(tiny_sqr_net, np.zeros((2, 8, 8, 3)), [0.5])


class TestGradientCheck:

    @pytest.mark.parametrize("head", [PQR, SQR])
    def test_backprop_matches_finite_differences(self, head):
        rng = np.random.default_rng(99)
        for trial in range(10):
            net = build(tiny_arch(head, m=4), seed=trial)
            x = rng.random((4, 8, 8, 3))
            targets = rng.dirichlet(np.ones(4), size=4) if head == PQR else rng.random(4)
            dropout_seed = trial if trial % 2 else None
            err = gradient_check(net, x, targets, n_params=200, seed=trial, dropout_seed=dropout_seed)
            assert err < 1e-5

    def test_network_without_hidden_layer(self):
        rng = np.random.default_rng(5)
        net = build(tiny_arch(SQR, fc_width=0), seed=2)
        err = gradient_check(net, rng.random((3, 8, 8, 3)), rng.random(3), n_params=100)
        assert err < 1e-5

    def test_detects_slightly_wrong_gradient(self, monkeypatch):
        import pqriqa.network as network

        exact = network.loss_and_grad

        def skewed(*args, **kwargs):
            loss, grads = exact(*args, **kwargs)
            return loss, {k: g * 1.001 for k, g in grads.items()}

        monkeypatch.setattr(network, "loss_and_grad", skewed)
        rng = np.random.default_rng(8)
        net = build(tiny_arch(PQR, m=4), seed=1)
        err = gradient_check(net, rng.random((4, 8, 8, 3)), rng.dirichlet(np.ones(4), size=4),
                             n_params=200)
        assert err > 5e-4

    def test_raises_when_no_parameter_can_be_checked(self, monkeypatch):
        monkeypatch.setattr("pqriqa.network._same_pattern", lambda a, b: False)
        rng = np.random.default_rng(3)
        net = build(tiny_arch(SQR), seed=0)
        with pytest.raises(NumericalFailureError, match="0 of 5"):
            gradient_check(net, rng.random((2, 8, 8, 3)), rng.random(2), n_params=5)

    def test_rejects_empty_sample(self, tiny_sqr_net):
        with pytest.raises(InvalidParameterError):
            gradient_check(tiny_sqr_net, np.zeros((1, 8, 8, 3)), [0.5], n_params=0)


class TestSgd:

    def test_zero_learning_rate_is_identity(self, tiny_pqr_net, rng):
        grads = {k: rng.normal(size=v.shape) for k, v in tiny_pqr_net.params.items()}
        stepped = sgd_step(tiny_pqr_net, grads, SgdState(), lr=0.0)
        assert all(np.array_equal(stepped.params[k], tiny_pqr_net.params[k]) for k in grads)

    def test_plain_gradient_step(self):
        out = sgd_update({"w": np.array(1.0)}, {"w": np.array(2.0)},
                         SgdState(momentum=0.0, weight_decay=0.0), lr=0.1)
        assert float(out["w"]) == pytest.approx(0.8)

    def test_momentum_accumulates(self):
        state = SgdState(momentum=0.9, weight_decay=0.0)
        params = {"w": np.array(0.0)}
        params = sgd_update(params, {"w": np.array(1.0)}, state, lr=0.1)
        params = sgd_update(params, {"w": np.array(1.0)}, state, lr=0.1)
        assert float(params["w"]) == pytest.approx(-0.29)

    def test_non_finite_gradient(self):
        with pytest.raises(NumericalFailureError):
            sgd_update({"w": np.array(1.0)}, {"w": np.array(np.nan)}, SgdState(), lr=0.1)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidParameterError):
            sgd_update({"w": np.zeros(2)}, {"w": np.zeros(3)}, SgdState(), lr=0.1)


class TestTrain:

    @pytest.fixture
    def data(self, rng):
        x = rng.random((24, 8, 8, 3))
        y = x.mean(axis=(1, 2, 3))
        return x, y

    def test_zero_learning_rate_keeps_parameters(self, tiny_pqr_net, data):
        x, y = data
        cfg = TrainConfig(epochs=1, batch_size=8, lr_start=0.0, lr_end=0.0)
        trained, trace = train(tiny_pqr_net, x, y, cfg, encoder=EncoderConfig())
        assert all(np.array_equal(trained.params[k], tiny_pqr_net.params[k]) for k in trained.params)
        assert len(trace) == 1

    def test_same_seed_same_run(self, tiny_sqr_net, data):
        x, y = data
        cfg = TrainConfig(epochs=3, batch_size=8, seed=4)
        a, trace_a = train(tiny_sqr_net, x, y, cfg)
        b, trace_b = train(tiny_sqr_net, x, y, cfg)
        assert trace_a == trace_b
        assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)

    def test_does_not_modify_input_network(self, tiny_sqr_net, data):
        x, y = data
        before = tiny_sqr_net.clone()
        train(tiny_sqr_net, x, y, TrainConfig(epochs=1, batch_size=8))
        assert all(np.array_equal(before.params[k], tiny_sqr_net.params[k]) for k in before.params)

    def test_learning_rates_are_log_spaced(self):
        lrs = TrainConfig(epochs=3, lr_start=1e-2, lr_end=1e-4).learning_rates()
        np.testing.assert_allclose(lrs, [1e-2, 1e-3, 1e-4])

    def test_encoder_required_for_pqr(self, tiny_pqr_net, data):
        x, y = data
        with pytest.raises(InvalidParameterError):
            train(tiny_pqr_net, x, y, TrainConfig(epochs=1))

    def test_encoder_rejected_for_sqr(self, tiny_sqr_net, data):
        x, y = data
        with pytest.raises(InvalidParameterError):
            train(tiny_sqr_net, x, y, TrainConfig(epochs=1), encoder=EncoderConfig())

    def test_anchor_count_must_match_head(self, data):
        x, y = data
        net = build(tiny_arch(PQR, m=3))
        with pytest.raises(InvalidParameterError):
            train(net, x, y, TrainConfig(epochs=1), encoder=EncoderConfig())

    def test_loss_halves_on_learnable_signal(self):
        rng = np.random.default_rng(21)
        brightness = rng.uniform(0.2, 0.8, size=50)
        x = np.clip(brightness[:, None, None, None] + 0.05 * rng.normal(size=(50, 32, 32, 3)), 0, 1)
        net = build(arch_preset("desk", head=SQR, dropout_rate=0.0), seed=0)
        _, trace = train(net, x, brightness, TrainConfig(epochs=30))
        assert trace[-1].mean_loss < 0.5 * trace[0].mean_loss

    def test_epoch_callback(self, tiny_sqr_net, data):
        x, y = data
        seen = []
        train(tiny_sqr_net, x, y, TrainConfig(epochs=2, batch_size=8),
              epoch_callback=lambda epoch, net: seen.append(epoch))
        assert seen == [1, 2]
