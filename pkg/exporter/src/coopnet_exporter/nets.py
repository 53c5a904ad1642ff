"""Small float and XNOR-style binary CNNs, CPU-trainable in minutes.

The binary net mirrors the exported graph exactly: a float first conv (kept
8-bit after export), batch-norm + sign binarization in place of activations,
valid-only binary convs with per-filter mean-|w| scaling, max pooling after
binarization, and a float classifier head (also kept 8-bit after export).
"""

import torch
from torch import nn


class _SignSTE(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x):
        ctx.save_for_backward(x)
        return torch.where(x >= 0, torch.ones_like(x), -torch.ones_like(x))

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        return grad * (x.abs() <= 1.0)


def sign_ste(x):
    return _SignSTE.apply(x)


class BinConv2d(nn.Conv2d):
    """Valid-only conv whose effective weight is alpha_f * sign(w_f)."""

    def __init__(self, in_channels, out_channels, kernel_size):
        super().__init__(in_channels, out_channels, kernel_size, bias=False)

    def effective_weight(self):
        alpha = self.weight.abs().mean(dim=(1, 2, 3), keepdim=True)
        signed = torch.where(self.weight >= 0, 1.0, -1.0)
        binary = alpha * signed
        return (binary - self.weight).detach() + self.weight  # straight-through

    def forward(self, x):
        return torch.nn.functional.conv2d(x, self.effective_weight())

    def export_alpha(self):
        return self.weight.abs().mean(dim=(1, 2, 3)).detach()

    def export_bits(self):
        return (self.weight.detach() >= 0).to(torch.uint8)


class FloatNet(nn.Module):
    """conv16-conv16-conv32 (5x5, same padding, pooled) + fc head."""

    def __init__(self, in_channels=3, num_classes=10, width=16):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, width, 5, padding=2)
        self.conv2 = nn.Conv2d(width, width, 5, padding=2)
        self.conv3 = nn.Conv2d(width, 2 * width, 5, padding=2)
        self.pool = nn.MaxPool2d(2, 2)
        self.fc = nn.Linear(2 * width * 4 * 4, num_classes)

    def forward(self, x):
        x = self.pool(torch.relu(self.conv1(x)))
        x = self.pool(torch.relu(self.conv2(x)))
        x = self.pool(torch.relu(self.conv3(x)))
        return self.fc(torch.flatten(x, 1))


class BinaryNet(nn.Module):
    """First/last layers float (exported to int8); binary blocks in between."""

    def __init__(self, in_channels=3, num_classes=10, width=16):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, width, 5, padding=2)
        self.bn1 = nn.BatchNorm2d(width)
        self.binconv2 = BinConv2d(width, width, 5)
        self.bn2 = nn.BatchNorm2d(width)
        self.binconv3 = BinConv2d(width, 2 * width, 5)
        self.bn3 = nn.BatchNorm2d(2 * width)
        self.pool = nn.MaxPool2d(2, 2)
        self.fc = nn.Linear(2 * width, num_classes)

    def forward(self, x):
        x = self.pool(self.conv1(x))          # 32 -> 16
        x = sign_ste(self.bn1(x))             # bridge
        x = self.binconv2(x)                  # 16 -> 12 (valid)
        x = self.pool(sign_ste(self.bn2(x)))  # 12 -> 6
        x = self.binconv3(x)                  # 6 -> 2 (valid)
        x = self.pool(sign_ste(self.bn3(x)))  # 2 -> 1
        return self.fc(torch.flatten(x, 1))
