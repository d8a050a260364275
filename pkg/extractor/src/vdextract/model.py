"""Architecture registry and activation taps.

A tap is one captured layer: convolutional taps are recorded post-ReLU and
spatially average-pooled to one value per filter; fully connected taps are
recorded post-ReLU as-is.  The feature count M of an architecture is always
discovered from the captured tensors, never hardcoded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import torch
from torch import nn
from torchvision import models, transforms

from .errors import UnknownArchitecture

IMAGENET_MEAN = [0.485, 0.456, 0.406]
IMAGENET_STD = [0.229, 0.224, 0.225]


class Tap(NamedTuple):
    name: str
    kind: str  # conv | fc
    module: nn.Module


@dataclass
class PreparedModel:
    arch: str
    model: nn.Module
    taps: list[Tap]
    preprocess: Callable
    provenance: str


def _vgg16(weights_mode: str, seed: int) -> PreparedModel:
    if weights_mode == "pretrained":
        model = models.vgg16(weights=models.VGG16_Weights.IMAGENET1K_V1)
        weight_note = "pretrained(imagenet1k_v1)"
    else:
        torch.manual_seed(seed)
        model = models.vgg16(weights=None)
        weight_note = f"random(seed={seed})"
    model.eval()

    taps: list[Tap] = []
    block, index_in_block = 1, 0
    features = list(model.features)
    for position, module in enumerate(features):
        if isinstance(module, nn.ReLU) and isinstance(
            features[position - 1], nn.Conv2d
        ):
            index_in_block += 1
            taps.append(Tap(f"conv{block}_{index_in_block}", "conv", module))
        elif isinstance(module, nn.MaxPool2d):
            block += 1
            index_in_block = 0
    classifier = list(model.classifier)
    fc_index = 0
    for position, module in enumerate(classifier):
        if isinstance(module, nn.ReLU) and isinstance(
            classifier[position - 1], nn.Linear
        ):
            fc_index += 1
            taps.append(Tap(f"fc{fc_index}", "fc", module))

    preprocess = transforms.Compose(
        [
            transforms.Resize(256),
            transforms.CenterCrop(224),
            transforms.ToTensor(),
            transforms.Normalize(mean=IMAGENET_MEAN, std=IMAGENET_STD),
        ]
    )
    provenance = (
        f"arch=vgg16 weights={weight_note} "
        "preprocess=resize256+centercrop224+normalize(imagenet)"
    )
    return PreparedModel("vgg16", model, taps, preprocess, provenance)


class _TinyConv(nn.Module):
    """Small fixture network for fast tests: M = 4 + 8 + 6 = 18."""

    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(3, 4, 3, padding=1)
        self.relu1 = nn.ReLU()
        self.pool = nn.MaxPool2d(2)
        self.conv2 = nn.Conv2d(4, 8, 3, padding=1)
        self.relu2 = nn.ReLU()
        self.head = nn.Linear(8, 6)
        self.relu3 = nn.ReLU()

    def forward(self, x):
        x = self.pool(self.relu1(self.conv1(x)))
        x = self.relu2(self.conv2(x))
        x = x.mean(dim=(2, 3))
        return self.relu3(self.head(x))


def _tinyconv(weights_mode: str, seed: int) -> PreparedModel:
    torch.manual_seed(seed)
    model = _TinyConv()
    model.eval()
    taps = [
        Tap("conv1", "conv", model.relu1),
        Tap("conv2", "conv", model.relu2),
        Tap("fc1", "fc", model.relu3),
    ]
    preprocess = transforms.Compose(
        [transforms.Resize((32, 32)), transforms.ToTensor()]
    )
    provenance = (
        f"arch=tinyconv weights=random(seed={seed}) preprocess=resize32"
    )
    return PreparedModel("tinyconv", model, taps, preprocess, provenance)


ARCHITECTURES: dict[str, Callable[[str, int], PreparedModel]] = {
    "vgg16": _vgg16,
    "tinyconv": _tinyconv,
}


def prepare(arch: str, weights_mode: str = "pretrained", seed: int = 0) -> PreparedModel:
    if arch not in ARCHITECTURES:
        raise UnknownArchitecture(
            f"unknown architecture {arch!r}; available: {sorted(ARCHITECTURES)}"
        )
    if weights_mode not in ("pretrained", "random"):
        raise UnknownArchitecture(
            f"weights must be 'pretrained' or 'random', got {weights_mode!r}"
        )
    return ARCHITECTURES[arch](weights_mode, seed)
