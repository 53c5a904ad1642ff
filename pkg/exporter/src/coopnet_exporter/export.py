"""Train a float/binary model pair and export an engine-ready bundle.

Outputs in out_dir:
    model.cpnt     two-arm model (binary arm first/last layers kept int8)
    golden.cpgv    per-layer reference outputs for a few eval inputs
    images.idx     eval images (u8, N x C x H x W)
    labels.idx     eval labels (u8)
    metadata.json  seed, epochs, attained accuracies, task parameters

Training is desk-scale on purpose; published full-scale accuracies are not
targets. The quantized arms are simulated with this package's own integer
reference (simulate.py); the golden file records those simulations computed
from the exact tensors serialized into model.cpnt.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .cpnt import write_cpnt
from .data import cifar10_subset, synthetic_task, to_model_domain
from .golden import GoldenRecord, bits_record, write_golden
from .idxio import write_idx
from .nets import BinaryNet, FloatNet, sign_ste
from .quantize import fuse_bn, pick_exponent, quantize_threshold_table, round_half_away, to_int8, to_int32
from .simulate import sim_arm, sim_predict

INPUT_EXP = -7


class ExportError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExportBundle:
    model_path: str
    golden_path: str
    images_path: str
    labels_path: str
    metadata_path: str
    metadata: dict


def _train(net, images_u8, labels, epochs, batch, lr, seed, log=print):
    torch.manual_seed(seed)
    x_all = torch.from_numpy(to_model_domain(images_u8))
    y_all = torch.from_numpy(labels.astype(np.int64))
    opt = torch.optim.Adam(net.parameters(), lr=lr)
    loss_fn = torch.nn.CrossEntropyLoss()
    order = np.random.default_rng(seed).permutation(len(y_all))
    net.train()
    last = float("nan")
    for epoch in range(epochs):
        for start in range(0, len(order), batch):
            idx = order[start : start + batch]
            opt.zero_grad()
            loss = loss_fn(net(x_all[idx]), y_all[idx])
            if not math.isfinite(loss.item()):
                raise ExportError(f"training diverged at epoch {epoch} (loss {loss.item()})")
            loss.backward()
            opt.step()
            last = loss.item()
        log(f"  epoch {epoch + 1}/{epochs} loss {last:.4f}")
    net.eval()
    return net


def _torch_accuracy(net, images_u8, labels) -> float:
    with torch.no_grad():
        logits = net(torch.from_numpy(to_model_domain(images_u8)))
    return float((logits.argmax(dim=1).numpy() == labels.astype(np.int64)).mean())


def _quantize_conv(name, conv, x_exp, peak, pad, stride=1):
    w = conv.weight.detach().numpy()
    w_exp = pick_exponent(w, -31, 0)
    acc_exp = x_exp + w_exp
    out_exp = max(pick_exponent([peak], -31, 0), acc_exp)
    shift = min(out_exp - acc_exp, 31)
    bias = conv.bias.detach().numpy() if conv.bias is not None else np.zeros(w.shape[0])
    return {
        "kind": "conv_int8",
        "name": name,
        "filters": w.shape[0],
        "in_c": w.shape[1],
        "kh": w.shape[2],
        "kw": w.shape[3],
        "stride": stride,
        "pad": pad,
        "shift": shift,
        "w_exp": w_exp,
        "weights": to_int8(w, w_exp).reshape(-1),
        "bias": to_int32(np.asarray(bias, dtype=np.float64) / 2.0**acc_exp),
    }, acc_exp + shift


def _quantize_fc(name, fc, x_exp, peak):
    w = fc.weight.detach().numpy()
    w_exp = pick_exponent(w, -31, 0)
    acc_exp = x_exp + w_exp
    out_exp = max(pick_exponent([peak], -31, 0), acc_exp)
    return {
        "kind": "fc_int8",
        "name": name,
        "out": w.shape[0],
        "in": w.shape[1],
        "shift": min(out_exp - acc_exp, 31),
        "w_exp": w_exp,
        "weights": to_int8(w, w_exp).reshape(-1),
        "bias": to_int32(fc.bias.detach().numpy().astype(np.float64) / 2.0**acc_exp),
    }


def _bridge_spec(name, bn):
    c, direction = fuse_bn(bn)
    c_int, cse = quantize_threshold_table(c)
    return {"kind": "binact_bridge", "name": name, "channels": c_int.size, "cse": cse, "c": c_int, "dir": direction}


def _binconv_spec(name, binconv, bn):
    alpha = binconv.export_alpha().numpy().astype(np.float64)
    ase = pick_exponent(alpha, -31, 8)
    c, direction = fuse_bn(bn)
    c_int, cse = quantize_threshold_table(c)
    w = binconv.weight
    return {
        "kind": "binconv_fused",
        "name": name,
        "filters": w.shape[0],
        "in_c": w.shape[1],
        "kh": w.shape[2],
        "kw": w.shape[3],
        "stride": 1,
        "ase": ase,
        "cse": cse,
        "alpha": to_int8(alpha, ase),
        "c": c_int,
        "dir": direction,
        "bits": binconv.export_bits().numpy().reshape(-1),
    }


def _pool(name):
    return {"kind": "maxpool", "name": name, "k": 2, "stride": 2}


def _calibrate_float(net: FloatNet, images_u8):
    x = torch.from_numpy(to_model_domain(images_u8))
    with torch.no_grad():
        a1 = net.conv1(x)
        p1 = net.pool(torch.relu(a1))
        a2 = net.conv2(p1)
        p2 = net.pool(torch.relu(a2))
        a3 = net.conv3(p2)
        p3 = net.pool(torch.relu(a3))
        logits = net.fc(torch.flatten(p3, 1))
    peak = lambda t: float(t.abs().max())
    return {"conv1": peak(a1), "conv2": peak(a2), "conv3": peak(a3), "fc": peak(logits)}


def _calibrate_binary(net: BinaryNet, images_u8):
    x = torch.from_numpy(to_model_domain(images_u8))
    with torch.no_grad():
        a1 = net.conv1(x)
        h = net.pool(a1)
        h = sign_ste(net.bn1(h))
        h = net.binconv2(h)
        h = net.pool(sign_ste(net.bn2(h)))
        h = net.binconv3(h)
        h = net.pool(sign_ste(net.bn3(h)))
        logits = net.fc(torch.flatten(h, 1))
    return {"conv1": float(a1.abs().max()), "fc": float(logits.abs().max())}


def _int8_arm(net: FloatNet, peaks, input_shape, num_classes):
    layers = []
    x_exp = INPUT_EXP
    spec, x_exp = _quantize_conv("int8/conv1", net.conv1, x_exp, peaks["conv1"], pad=2)
    layers += [spec, {"kind": "relu", "name": "int8/relu1"}, _pool("int8/pool1")]
    spec, x_exp = _quantize_conv("int8/conv2", net.conv2, x_exp, peaks["conv2"], pad=2)
    layers += [spec, {"kind": "relu", "name": "int8/relu2"}, _pool("int8/pool2")]
    spec, x_exp = _quantize_conv("int8/conv3", net.conv3, x_exp, peaks["conv3"], pad=2)
    layers += [spec, {"kind": "relu", "name": "int8/relu3"}, _pool("int8/pool3")]
    layers.append(_quantize_fc("int8/fc", net.fc, x_exp, peaks["fc"]))
    layers.append({"kind": "softmax_head", "name": "int8/softmax"})
    return {"arm": "int8", "input_shape": input_shape, "num_classes": num_classes, "layers": layers}


def _bnn_arm(net: BinaryNet, peaks, input_shape, num_classes):
    layers = []
    spec, _ = _quantize_conv("bnn/conv1", net.conv1, INPUT_EXP, peaks["conv1"], pad=2)
    layers += [spec, _pool("bnn/pool1")]
    layers.append(_bridge_spec("bnn/bridge", net.bn1))
    layers.append(_binconv_spec("bnn/binconv2", net.binconv2, net.bn2))
    layers.append(_pool("bnn/pool2"))
    layers.append(_binconv_spec("bnn/binconv3", net.binconv3, net.bn3))
    layers.append(_pool("bnn/pool3"))
    layers.append(_quantize_fc("bnn/fc", net.fc, 0, peaks["fc"]))
    layers.append({"kind": "softmax_head", "name": "bnn/softmax"})
    return {"arm": "bnn", "input_shape": input_shape, "num_classes": num_classes, "layers": layers}


def _golden_records(bnn_arm, int8_arm, images_u8, count):
    from .simulate import quantize_input_u8

    records = []
    for s in range(count):
        img = images_u8[s]
        records.append(
            GoldenRecord(s, "input", "input", "i8", tuple(img.shape), INPUT_EXP, quantize_input_u8(img).reshape(-1))
        )
        for arm in (bnn_arm, int8_arm):
            _, trace = sim_arm(arm, img, record=True)
            for name, tag, arr, scale in trace:
                shape = tuple(arr.shape) if arr.ndim == 3 else (arr.size, 1, 1)
                if tag == "bits":
                    records.append(bits_record(s, arm["arm"], name, arr))
                else:
                    records.append(GoldenRecord(s, arm["arm"], name, tag, shape, scale, arr.reshape(-1)))
    return records


def train_and_export(
    task: str = "synthetic",
    out_dir: str = "export",
    seed: int = 7,
    epochs: int = 4,
    train_samples: int = 4000,
    eval_samples: int = 1000,
    noise: float = 60.0,
    golden_samples: int = 4,
    width: int = 16,
    batch: int = 64,
    lr: float = 1e-3,
    log=print,
) -> ExportBundle:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if task == "synthetic":
        (train_x, train_y), (eval_x, eval_y), num_classes = synthetic_task(
            train_samples, eval_samples, seed, noise=noise
        )
    elif task == "cifar10-subset":
        try:
            (train_x, train_y), (eval_x, eval_y), num_classes = cifar10_subset(
                train_samples, eval_samples, seed
            )
        except Exception as e:
            raise ExportError(f"cifar10 subset unavailable ({e}); use --task synthetic") from e
    else:
        raise ExportError(f"unknown task {task!r}")
    input_shape = tuple(train_x.shape[1:])

    log(f"[float net] training on {task} ({train_samples} samples)")
    torch.manual_seed(seed)  # seed before construction: init draws from the global stream
    float_net = _train(FloatNet(input_shape[0], num_classes, width), train_x, train_y, epochs, batch, lr, seed)
    log(f"[binary net] training on {task}")
    torch.manual_seed(seed + 1)
    binary_net = _train(
        BinaryNet(input_shape[0], num_classes, width), train_x, train_y, epochs, batch, lr, seed + 1
    )

    calib = train_x[: min(512, len(train_x))]
    int8_arm = _int8_arm(float_net, _calibrate_float(float_net, calib), input_shape, num_classes)
    bnn_arm = _bnn_arm(binary_net, _calibrate_binary(binary_net, calib), input_shape, num_classes)

    log("[eval] scoring fp32 / int8 / bnn")
    metadata = {
        "task": task,
        "seed": seed,
        "epochs": epochs,
        "train_samples": int(train_samples),
        "eval_samples": int(eval_samples),
        "noise": noise if task == "synthetic" else None,
        "width": width,
        "accuracy": {
            "fp32": _torch_accuracy(float_net, eval_x, eval_y),
            "fp32_binary_net": _torch_accuracy(binary_net, eval_x, eval_y),
            "int8": float((sim_predict(int8_arm, eval_x) == eval_y.astype(np.int64)).mean()),
            "bnn": float((sim_predict(bnn_arm, eval_x) == eval_y.astype(np.int64)).mean()),
        },
        "status": "ok",
    }
    log(f"[eval] {metadata['accuracy']}")

    model_path = out / "model.cpnt"
    golden_path = out / "golden.cpgv"
    images_path = out / "images.idx"
    labels_path = out / "labels.idx"
    metadata_path = out / "metadata.json"

    write_cpnt(bnn_arm, int8_arm, model_path)
    write_golden(_golden_records(bnn_arm, int8_arm, eval_x, golden_samples), golden_path)
    write_idx(eval_x, images_path)
    write_idx(eval_y, labels_path)
    metadata_path.write_text(json.dumps(metadata, indent=2, sort_keys=True))

    return ExportBundle(
        model_path=str(model_path),
        golden_path=str(golden_path),
        images_path=str(images_path),
        labels_path=str(labels_path),
        metadata_path=str(metadata_path),
        metadata=metadata,
    )
