"""The fixed CNN and its weight-file export.

Architecture is frozen by the inference contract: three 3x3 conv blocks
(8/16/32 channels, ReLU, 2x2 max pool), global average pooling, and a
single dense head - one output for beta regression, two logits (x, y)
for axis classification.
"""

import enum

import torch
from torch import nn

from .formats import _KIND_CONV, _KIND_DENSE, read_mirw, write_mirw

BETA_CLAMP = (0.05, 100.0)


class Head(enum.IntEnum):
    # values are the head byte of the weight format
    REGRESSION = 0
    CLASSIFICATION = 1


class SegmentCnn(nn.Module):
    def __init__(self, head: Head):
        super().__init__()
        self.head = Head(head)
        self.conv1 = nn.Conv2d(1, 8, 3, padding=1)
        self.conv2 = nn.Conv2d(8, 16, 3, padding=1)
        self.conv3 = nn.Conv2d(16, 32, 3, padding=1)
        self.dense = nn.Linear(32, 1 if self.head is Head.REGRESSION else 2)
        self.pool = nn.MaxPool2d(2)
        self.act = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.pool(self.act(self.conv1(x)))
        x = self.pool(self.act(self.conv2(x)))
        x = self.pool(self.act(self.conv3(x)))
        x = x.mean(dim=(2, 3))
        return self.dense(x)


def export_weights(model: SegmentCnn, destination) -> None:
    """Write the model's parameters in inference order."""
    layers = []
    for conv in (model.conv1, model.conv2, model.conv3):
        layers.append((_KIND_CONV,
                       conv.weight.detach().numpy(),
                       conv.bias.detach().numpy()))
    layers.append((_KIND_DENSE,
                   model.dense.weight.detach().numpy(),
                   model.dense.bias.detach().numpy()))
    write_mirw(int(model.head), layers, destination)


def import_weights(path) -> SegmentCnn:
    """Rebuild a model from a weight file."""
    head, layers = read_mirw(path)
    model = SegmentCnn(Head(head))
    modules = [model.conv1, model.conv2, model.conv3, model.dense]
    if len(layers) != len(modules):
        raise ValueError(f"{path}: expected {len(modules)} layers, "
                         f"got {len(layers)}")
    with torch.no_grad():
        for module, (kind, weights, bias) in zip(modules, layers):
            want = _KIND_DENSE if isinstance(module, nn.Linear) else _KIND_CONV
            if kind != want or module.weight.shape != weights.shape:
                raise ValueError(f"{path}: layer layout does not match the "
                                 "fixed architecture")
            module.weight.copy_(torch.from_numpy(weights))
            module.bias.copy_(torch.from_numpy(bias))
    model.eval()
    return model
