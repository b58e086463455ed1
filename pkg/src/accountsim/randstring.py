"""Logistic-regression detector for randomly generated screen names.

Features: character 1/2/3-grams hashed (signed) into a fixed 4096-wide
table, plus Shannon entropy (case-sensitive, bits), length, digit ratio,
and case-transition rate. Trained with plain SGD on logistic loss + L2.

The benchmark generators mimic the two handle populations: uniform
15-character alphanumeric strings vs. dictionary-word handles with a few
digits and optional underscores.
"""
from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import TrainingError

HASH_WIDTH = 4096
NGRAM_ORDERS = (1, 2, 3)
EXTRA_FEATURES = 4  # entropy, length, digit_ratio, case_transitions
ALPHANUMERIC = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"

WORDS = (
    "able acid aged also area army away baby back ball band bank base bath bear beat "
    "bell belt best bird blow blue boat body bomb bond bone book boom born boss both "
    "bowl bulk burn bush busy call calm came camp card care case cash cast cell chat "
    "chip city club coal coat code cold come cook cool cope copy core cost crew crop "
    "dark data date dawn days dead deal dean dear debt deep deny desk dial dice diet "
    "disc disk does done door dose down draw drew drop drug dual duke dust duty each "
    "earn ease east easy edge else even ever evil exit face fact fail fair fall farm "
    "fast fate fear feed feel feet fell felt file fill film find fine fire firm fish "
    "five flat flow food foot ford form fort four free from fuel full fund gain game "
    "gate gave gear gift girl give glad goal goes gold golf gone good gray grew grey "
    "grow gulf hair half hall hand hang hard harm hate have head hear heat held hell "
    "help here hero high hill hire hold hole holy home hope host hour huge hung hunt "
    "hurt idea inch into iron item join jump jury just keen keep kent kept kick kind "
    "king knee knew know lack lady laid lake land lane last late lead left less life "
    "lift like line link list live load loan lock logo long look lord lose loss lost "
    "love luck made mail main make male many mark mass matt meal mean meat meet menu "
    "mere mike mile milk mind mine miss mode mood moon more most move much must name "
    "navy near neck need news next nice nick nine none nose note okay once only onto "
    "open oral over pace pack page paid pain pair palm park part pass past path peak "
    "pick pink pipe plan play plot plus poll pool poor port post pull pure push race "
    "rail rain rank rare rate read real rear rely rent rest rice rich ride ring rise "
    "risk road rock role roll roof room root rose rule rush safe sake sale salt same "
    "sand save seat seed seek seem seen self sell send sent sept ship shop shot show "
    "shut sick side sign site size skin slip slow snow soft soil sold sole some song "
    "soon sort soul spot star stay step stop such suit sure take tale talk tall tank "
    "tape task team tech tell tend term test text than that them then they thin this "
    "thus till time tiny told toll tone tony took tool tour town tree trip true tune "
    "turn twin type unit upon used user vary vast very vice view vote wage wait wake "
    "walk wall want ward warm wash wave ways weak wear week well went were west what "
    "when whom wide wife wild will wind wine wing wire wise wish with wood word wore "
    "work yard yeah year your zero zone"
).split()


ENTROPY_SCALE = 6.0  # log2(64) covers the alphanumeric alphabet
LENGTH_SCALE = 32.0


@dataclass
class NameFeatures:
    ngram: np.ndarray  # signed hashed n-gram frequencies, HASH_WIDTH wide
    shannon_entropy: float  # bits
    length: int
    digit_ratio: float
    case_transitions: float

    def to_vector(self) -> np.ndarray:
        # Entropy and length are rescaled to roughly [0, 1] so one SGD
        # learning rate suits all coordinates.
        return np.concatenate([
            self.ngram,
            [self.shannon_entropy / ENTROPY_SCALE, self.length / LENGTH_SCALE,
             self.digit_ratio, self.case_transitions],
        ])


def _hash_ngram(gram: str) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    value = int.from_bytes(digest, "little")
    sign = 1.0 if value & 1 else -1.0
    return (value >> 1) % HASH_WIDTH, sign


def featurize(name: str) -> NameFeatures:
    """Deterministic feature vector for one screen name; empty names are invalid."""
    if not name:
        raise ValueError("screen name is empty")
    counts = Counter(name)
    n = len(name)
    entropy = -sum((c / n) * math.log2(c / n) for c in counts.values())
    digits = sum(1 for ch in name if ch.isdigit())
    transitions = sum(
        1
        for a, b in zip(name, name[1:])
        if a.isalpha() and b.isalpha() and a.islower() != b.islower()
    )
    ngram = np.zeros(HASH_WIDTH, dtype=np.float64)
    total = 0
    for order in NGRAM_ORDERS:
        for i in range(max(0, n - order + 1)):
            idx, sign = _hash_ngram(name[i:i + order])
            ngram[idx] += sign
            total += 1
    if total:
        ngram /= total
    return NameFeatures(
        ngram=ngram,
        shannon_entropy=entropy,
        length=n,
        digit_ratio=digits / n,
        case_transitions=transitions / (n - 1) if n > 1 else 0.0,
    )


@dataclass
class LogisticModel:
    weights: np.ndarray  # HASH_WIDTH + EXTRA_FEATURES
    bias: float
    meta: dict

    def decision(self, features: np.ndarray) -> float:
        return float(features @ self.weights + self.bias)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def train(
    pos: list[str],
    neg: list[str],
    lr: float = 0.05,
    epochs: int = 10,
    l2: float = 1e-4,
    seed: int = 0,
) -> LogisticModel:
    """SGD on logistic loss with L2; deterministic for a fixed seed.

    Positives are the random-string class. Weights start at zero, so a
    label flip exactly negates the trajectory.
    """
    if not pos or not neg:
        raise ValueError("both classes must be nonempty")
    x = np.stack([featurize(nm).to_vector() for nm in pos + neg])
    y = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
    n, dim = x.shape
    w = np.zeros(dim, dtype=np.float64)
    b = 0.0
    rng = np.random.default_rng(seed)
    loss_history = []
    for _ in range(epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        for i in order:
            z = float(x[i] @ w + b)
            pred = _sigmoid(z)
            err = pred - y[i]
            w -= lr * (err * x[i] + l2 * w)
            b -= lr * err
            total_loss += -(y[i] * _log_sig(z) + (1.0 - y[i]) * _log_sig(-z))
        mean_loss = total_loss / n
        if not math.isfinite(mean_loss):
            raise TrainingError("logistic training diverged; lower the learning rate")
        loss_history.append(mean_loss)
    return LogisticModel(
        weights=w,
        bias=b,
        meta={"lr": lr, "epochs": epochs, "l2": l2, "seed": seed, "loss_history": loss_history},
    )


def _log_sig(x: float) -> float:
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def predict(model: LogisticModel, name: str) -> float:
    """Probability the name is a random string, strictly inside (0, 1)."""
    return _sigmoid(model.decision(featurize(name).to_vector()))


def save_model(model: LogisticModel, path) -> None:
    payload = {
        "weights": [float(v) for v in model.weights],
        "bias": model.bias,
        "meta": model.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> LogisticModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return LogisticModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=float(payload["bias"]),
        meta=payload.get("meta", {}),
    )


def gen_random_names(count: int, rng: np.random.Generator, length: int = 15) -> list[str]:
    """Uniform alphanumeric strings of the given length."""
    alphabet = np.array(list(ALPHANUMERIC))
    picks = rng.integers(0, len(alphabet), size=(count, length))
    return ["".join(alphabet[row]) for row in picks]


def gen_dictionary_names(count: int, rng: np.random.Generator) -> list[str]:
    """Dictionary-style handles: 1-3 words, up to 4 digits, optional underscores."""
    names = []
    for _ in range(count):
        n_words = int(rng.integers(1, 4))
        words = [WORDS[int(rng.integers(len(WORDS)))] for _ in range(n_words)]
        if rng.random() < 0.5:
            words = [w.capitalize() if rng.random() < 0.5 else w for w in words]
        sep = "_" if rng.random() < 0.3 else ""
        handle = sep.join(words)
        n_digits = int(rng.integers(0, 5))
        if n_digits:
            handle += "".join(str(int(d)) for d in rng.integers(0, 10, size=n_digits))
        names.append(handle)
    return names


def benchmark_dataset(
    n_per_class: int = 10_000,
    holdout_frac: float = 0.2,
    seed: int = 0,
) -> tuple[tuple[list[str], list[str]], tuple[list[str], list[str]]]:
    """((train_pos, train_neg), (test_pos, test_neg)) for the synthetic benchmark."""
    rng = np.random.default_rng(seed)
    pos = gen_random_names(n_per_class, rng)
    neg = gen_dictionary_names(n_per_class, rng)
    n_test = int(n_per_class * holdout_frac)
    return (pos[n_test:], neg[n_test:]), (pos[:n_test], neg[:n_test])
