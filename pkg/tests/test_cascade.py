import numpy as np
import pytest

from coopnet.cascade import (
    CascadeConfig,
    confidence_score,
    evaluate_batch,
    infer,
    sweep_ct,
    thread_count,
)
from coopnet.engine import quantize_input, run_arm
from coopnet.errors import DatasetError, NumericError, ShapeError
from coopnet.perf import synthetic_profile, arm_latency
from coopnet.tensors import Shape


def test_quantize_input_convention():
    img = np.array([[[0, 128, 255, 64]]], dtype=np.uint8)
    q = quantize_input(img, Shape(1, 1, 4))
    assert list(q.flat()) == [-128, 0, 127, -64]
    assert q.scale_exp == -7
    with pytest.raises(ShapeError):
        quantize_input(img.astype(np.int32), Shape(1, 1, 4))
    with pytest.raises(ShapeError):
        quantize_input(img, Shape(1, 1, 5))


def test_run_arm_outputs_probabilities(model, dataset):
    images, _ = dataset
    xq = quantize_input(images[0], model.input_shape)
    for graph in (model.bnn, model.int8):
        out = run_arm(graph, xq)
        assert out.probs.shape == (4,)
        assert abs(out.probs.sum() - 1.0) <= 1e-6
        assert out.logits is not None
        again = run_arm(graph, xq)
        assert np.array_equal(out.probs, again.probs)


def test_run_arm_trace_covers_every_layer(model, dataset):
    images, _ = dataset
    xq = quantize_input(images[0], model.input_shape)
    out = run_arm(model.bnn, xq, trace=True)
    assert [name for name, _ in out.trace] == list(model.bnn.layer_names())


def test_confidence_score_examples():
    assert confidence_score([0.7, 0.2, 0.1]) == pytest.approx(0.5)
    assert confidence_score([0.5, 0.5]) == 0.0
    assert confidence_score([0.0, 1.0, 0.0]) == 1.0
    with pytest.raises(ShapeError):
        confidence_score([1.0])
    with pytest.raises(NumericError):
        confidence_score([0.9, 0.3])


def test_cascade_config_bounds():
    CascadeConfig(0.0)
    CascadeConfig(0.999)
    with pytest.raises(NumericError):
        CascadeConfig(1.0)
    with pytest.raises(NumericError):
        CascadeConfig(-0.1)


def test_infer_ct_zero_always_bnn(model, dataset):
    images, _ = dataset
    for i in range(8):
        pred = infer(model, images[i], CascadeConfig(0.0))
        assert pred.source == "bnn"
        assert pred.cs >= 0.0
        assert abs(pred.probs.sum() - 1.0) <= 1e-6


def test_infer_escalates_below_threshold(model, dataset):
    images, _ = dataset
    # find a sample whose binary-arm confidence is clearly below some threshold
    picked = None
    for i in range(len(images)):
        xq = quantize_input(images[i], model.input_shape)
        cs = confidence_score(run_arm(model.bnn, xq).probs)
        if cs < 0.8:
            picked = (i, cs)
            break
    assert picked is not None, "seeded dataset should contain an uncertain sample"
    i, cs = picked
    pred = infer(model, images[i], CascadeConfig(min(0.99, cs + 0.05)))
    assert pred.source == "int8"
    xq = quantize_input(images[i], model.input_shape)
    assert np.array_equal(pred.probs, run_arm(model.int8, xq).probs)


def test_routing_matches_two_pass_oracle(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    ct = 0.4
    report = evaluate_batch(model, images, labels, CascadeConfig(ct), profile)
    for rec in report.samples:
        xq = quantize_input(images[rec.index], model.input_shape)
        probs = run_arm(model.bnn, xq).probs
        s = np.sort(probs.astype(np.float64))
        cs = float(s[-1] - s[-2])  # direct top-two gap
        assert (rec.source == "bnn") == (cs >= ct)
        assert rec.cs == pytest.approx(cs, abs=1e-12)
    assert report.forwarded_count == sum(1 for r in report.samples if r.source == "int8")


def test_accuracy_at_ct_zero_equals_bnn_only(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    report = evaluate_batch(model, images, labels, CascadeConfig(0.0), profile)
    bnn_only = []
    for i in range(len(images)):
        xq = quantize_input(images[i], model.input_shape)
        bnn_only.append(int(np.argmax(run_arm(model.bnn, xq).probs)))
    expected = float(np.mean(np.array(bnn_only) == labels.astype(np.int64)))
    assert report.accuracy == expected
    assert report.forwarded_count == 0


def test_latency_identities(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    l_bnn = arm_latency(model.bnn, profile)
    l_int8 = arm_latency(model.int8, profile)
    bs = len(images)

    r0 = evaluate_batch(model, images, labels, CascadeConfig(0.0), profile)
    assert r0.modeled_latency == bs * (l_bnn + profile.l_cs)

    # all samples escalate when ct exceeds every observed score
    max_cs = max(r.cs for r in r0.samples)
    assert max_cs < 0.9999
    r1 = evaluate_batch(model, images, labels, CascadeConfig(0.9999), profile)
    assert r1.forwarded_count == bs
    assert r1.modeled_latency == bs * (l_bnn + profile.l_cs + l_int8)

    rm = evaluate_batch(model, images, labels, CascadeConfig(0.4), profile)
    f = rm.forwarded_count
    assert rm.modeled_latency == f * (l_bnn + profile.l_cs + l_int8) + (bs - f) * (l_bnn + profile.l_cs)


def test_endpoint_identity_all_forwarded_equals_int8_only(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    int8_only = []
    for i in range(len(images)):
        xq = quantize_input(images[i], model.input_shape)
        int8_only.append(int(np.argmax(run_arm(model.int8, xq).probs)))
    int8_accuracy = float(np.mean(np.array(int8_only) == labels.astype(np.int64)))

    report = evaluate_batch(model, images, labels, CascadeConfig(0.9999), profile)
    assert report.forwarded_count == len(images)  # every sample escalated
    assert report.accuracy == int8_accuracy
    assert [r.predicted for r in report.samples] == int8_only


def test_forwarded_fraction_monotone(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    cts = [i / 10 for i in range(10)]
    rows = sweep_ct(model, images, labels, cts, profile)
    fractions = [r.forwarded_fraction for r in rows]
    assert fractions == sorted(fractions)
    assert rows[0].forwarded_fraction == 0.0


def test_sweep_rows_match_evaluate_batch(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    cts = [0.0, 0.25, 0.7]
    rows = sweep_ct(model, images, labels, cts, profile)
    bs = len(images)
    for row in rows:
        report = evaluate_batch(model, images, labels, CascadeConfig(row.ct), profile)
        assert row.accuracy == report.accuracy
        assert row.forwarded_fraction == report.forwarded_count / bs
        assert row.modeled_latency == report.modeled_latency


def test_sweep_speedup_definition(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    l_int8 = arm_latency(model.int8, profile)
    rows = sweep_ct(model, images, labels, [0.0, 0.5], profile)
    bs = len(images)
    for row in rows:
        assert row.avg_speedup == pytest.approx(1.0 - row.modeled_latency / (bs * l_int8))
    assert rows[0].avg_speedup >= rows[1].avg_speedup  # escalating more is never faster


def test_synthetic_profile_favors_binary_arm_at_scale():
    from coopnet.modelfile import build_caffenet

    m = build_caffenet()
    profile = synthetic_profile(m)
    assert arm_latency(m.bnn, profile) < arm_latency(m.int8, profile)


def test_report_determinism_and_threads(model, dataset, monkeypatch):
    images, labels = dataset
    profile = synthetic_profile(model)
    r1 = evaluate_batch(model, images, labels, CascadeConfig(0.3), profile)
    r2 = evaluate_batch(model, images, labels, CascadeConfig(0.3), profile)
    assert r1.to_json() == r2.to_json()
    monkeypatch.setenv("COOPNET_THREADS", "4")
    assert thread_count() == 4
    r3 = evaluate_batch(model, images, labels, CascadeConfig(0.3), profile)
    assert r3.to_json() == r1.to_json()
    monkeypatch.setenv("COOPNET_THREADS", "zero")
    with pytest.raises(NumericError):
        thread_count()


def test_label_count_mismatch(model, dataset):
    images, labels = dataset
    profile = synthetic_profile(model)
    with pytest.raises(DatasetError):
        evaluate_batch(model, images, labels[:-3], CascadeConfig(0.0), profile)
    with pytest.raises(DatasetError):
        sweep_ct(model, images, None, [0.0], profile)


def test_dataset_shape_checks(model):
    profile = synthetic_profile(model)
    bad = np.zeros((4, 3, 8, 8), dtype=np.uint8)
    with pytest.raises(DatasetError):
        evaluate_batch(model, bad, None, CascadeConfig(0.0), profile)
    with pytest.raises(DatasetError):
        evaluate_batch(model, np.zeros((0, 2, 8, 8), np.uint8), None, CascadeConfig(0.0), profile)
