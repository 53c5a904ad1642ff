"""Training data: a CIFAR-10-shaped synthetic task, or a real CIFAR-10 subset
when torchvision can reach its mirror (not the case in offline sandboxes)."""

import numpy as np


def _smooth(rng, shape, passes=3):
    """Low-frequency random field via repeated box blurring of white noise."""
    field = rng.normal(size=shape)
    for _ in range(passes):
        for axis in (1, 2):
            field = (field + np.roll(field, 1, axis) + np.roll(field, -1, axis)) / 3.0
    return field


def synthetic_task(n_train: int, n_eval: int, seed: int, noise: float = 60.0,
                   num_classes: int = 10, shape=(3, 32, 32)):
    """Class-template images plus heavy pixel noise, in u8.

    The noise level is chosen so a small binary net lands clearly below a
    small int8 net in accuracy, which is the regime the cascade exists for.
    """
    rng = np.random.default_rng(seed)
    templates = []
    for _ in range(num_classes):
        t = _smooth(rng, shape)
        t = (t - t.min()) / (t.max() - t.min() + 1e-9)
        templates.append(40 + 175 * t)
    templates = np.stack(templates)  # (classes, c, h, w) in u8 range

    def draw(n, seed_offset):
        r = np.random.default_rng(seed + seed_offset)
        labels = r.integers(0, num_classes, size=n)
        gain = r.uniform(0.6, 1.4, size=(n, 1, 1, 1))
        imgs = templates[labels] * gain + r.normal(0, noise, size=(n, *shape))
        return np.clip(imgs, 0, 255).astype(np.uint8), labels.astype(np.uint8)

    train = draw(n_train, 1)
    evaluation = draw(n_eval, 2)
    return train, evaluation, num_classes


def cifar10_subset(n_train: int, n_eval: int, seed: int):
    """Real CIFAR-10 via torchvision. Raises if the dataset is unreachable."""
    from torchvision.datasets import CIFAR10  # optional dependency

    train_set = CIFAR10(root="/tmp/cifar10", train=True, download=True)
    test_set = CIFAR10(root="/tmp/cifar10", train=False, download=True)
    rng = np.random.default_rng(seed)

    def subset(ds, n):
        idx = rng.choice(len(ds), size=n, replace=False)
        imgs = np.stack([np.asarray(ds[i][0]) for i in idx])  # (n, h, w, c) u8
        labels = np.array([ds[i][1] for i in idx], dtype=np.uint8)
        return imgs.transpose(0, 3, 1, 2).copy(), labels

    return subset(train_set, n_train), subset(test_set, n_eval), 10


def to_model_domain(images_u8: np.ndarray) -> np.ndarray:
    """u8 pixels -> the float values the engine's input grid represents."""
    return (images_u8.astype(np.float32) - 128.0) / 128.0
