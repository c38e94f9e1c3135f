"""Dataset generation and ingestion for both experiments.

All randomness flows through counter-based Philox generators keyed by
(seed, stream, index) via numpy's SeedSequence spawning, so every sample
is a pure function of its coordinates and any run is reconstructible
bit for bit.

The flip task draws glyphs on 16x16 grids at random offsets, applies one
of {no flip, row flip, column flip} with equal probability and remaps the
label: classes 0-2 always keep their label, 3-5 become the extra NaN
class under a column (horizontal) flip, 6-7 under a row (vertical) flip,
and 8-9 under either flip.  The glyph shapes are chosen so that their
symmetry matches their class: 0-2 are symmetric under both flips, 3-5
only under the row flip, 6-7 only under the column flip, 8-9 under
neither, which keeps every (glyph, flip) image consistent with exactly
one label.

The spinor task serves four fixed prototypes (noisy positions, fixed
spinor features, one target spinor per class) built so that classes 1/3
and 2/4 share spatial shapes while 1/2 and 3/4 share spinor features.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from projeq import su2

NAN_CLASS = 10
IMAGE_SIZE = 16

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class IdxMagicError(ValueError):
    pass


class IdxTruncationError(ValueError):
    pass


class IdxDimensionError(ValueError):
    pass


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for a (seed, stream...) coordinate."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


# ---------------------------------------------------------------------------
# IDX files


def read_idx(path) -> np.ndarray:
    """Parse an IDX u8 tensor file (big-endian), scaled to [0, 1] for images.

    Magic 0x803 marks 3-d image stacks, 0x801 1-d label vectors.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 4:
        raise IdxMagicError(f"{path}: file too short for a magic number")
    (magic,) = struct.unpack(">I", blob[:4])
    if magic == IDX_IMAGE_MAGIC:
        ndim = 3
    elif magic == IDX_LABEL_MAGIC:
        ndim = 1
    else:
        raise IdxMagicError(f"{path}: unrecognized magic 0x{magic:08x}")
    header = 4 + 4 * ndim
    if len(blob) < header:
        raise IdxTruncationError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", blob[4:header])
    count = 1
    for d in dims:
        count *= d
    if count > 1 << 62 or any(d > 1 << 31 for d in dims):
        raise IdxDimensionError(f"{path}: implausible dimensions {dims}")
    payload = blob[header:]
    if len(payload) != count:
        raise IdxTruncationError(f"{path}: payload holds {len(payload)} bytes, expected {count}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(dims)
    if magic == IDX_IMAGE_MAGIC:
        return data.astype(np.float64) / 255.0
    return data.astype(np.int64)


def write_idx_images(path, images: np.ndarray) -> None:
    """Inverse of read_idx for 3-d u8 image stacks (fixtures, exports)."""
    arr = np.asarray(images)
    u8 = np.clip(np.round(arr * 255.0), 0, 255).astype(np.uint8) if arr.dtype != np.uint8 else arr
    with open(path, "wb") as f:
        f.write(struct.pack(">I", IDX_IMAGE_MAGIC))
        f.write(struct.pack(">3I", *u8.shape))
        f.write(u8.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">I", IDX_LABEL_MAGIC))
        f.write(struct.pack(">I", labels.shape[0]))
        f.write(labels.tobytes())


# ---------------------------------------------------------------------------
# Flip task

_GLYPH_ART = {
    # both-flip symmetric (classes 0-2)
    0: """
.#####.
#.....#
#.....#
#.....#
#.....#
#.....#
.#####.
""",
    1: """
#.....#
#.....#
#.....#
#######
#.....#
#.....#
#.....#
""",
    2: """
...#...
...#...
...#...
#######
...#...
...#...
...#...
""",
    # row-flip symmetric only (classes 3-5): column flip changes them
    3: """
######.
#......
#......
#####..
#......
#......
######.
""",
    4: """
.#####.
#.....#
#......
#......
#......
#.....#
.#####.
""",
    5: """
#...##.
#..#...
#.#....
##.....
#.#....
#..#...
#...##.
""",
    # column-flip symmetric only (classes 6-7): row flip changes them
    6: """
#######
...#...
...#...
...#...
...#...
...#...
...#...
""",
    7: """
...#...
..#.#..
.#...#.
#.....#
#######
#.....#
#.....#
""",
    # asymmetric under both flips (classes 8-9)
    8: """
#......
#......
#......
#......
#......
#......
#######
""",
    9: """
######.
#......
#......
#####..
#......
#......
#......
""",
}


def glyph_stamps() -> np.ndarray:
    """The ten 7x7 glyph bitmaps as a (10, 7, 7) float array."""
    out = np.zeros((10, 7, 7))
    for label, art in _GLYPH_ART.items():
        rows = [line for line in art.strip().splitlines()]
        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch == "#":
                    out[label, r, c] = 1.0
    return out


def remap_label(label: int, flip: int) -> int:
    """The flip relabeling rule; flip 0 = none, 1 = rows, 2 = columns."""
    if flip == 0 or label <= 2:
        return label
    if 3 <= label <= 5:
        return NAN_CLASS if flip == 2 else label
    if label in (6, 7):
        return NAN_CLASS if flip == 1 else label
    if label in (8, 9):
        return NAN_CLASS
    raise ValueError(f"label {label} outside 0-9")


def glyph_consistency_check() -> bool:
    """Equal (glyph, flip) images must always receive equal labels."""
    stamps = glyph_stamps()
    variants = []
    for label in range(10):
        for flip in range(3):
            img = stamps[label]
            if flip == 1:
                img = img[::-1, :]
            elif flip == 2:
                img = img[:, ::-1]
            variants.append((img, remap_label(label, flip)))
    for i, (img_a, lab_a) in enumerate(variants):
        for img_b, lab_b in variants[i + 1 :]:
            if np.array_equal(img_a, img_b) and lab_a != lab_b:
                return False
    return True


@dataclass(frozen=True)
class FlipDataset:
    images: np.ndarray  # (n, 16, 16)
    labels: np.ndarray  # (n,) remapped, 0-10
    base_labels: np.ndarray  # (n,) original glyph class 0-9
    flips: np.ndarray  # (n,) 0 none / 1 rows / 2 columns


PIXEL_NOISE = 0.12
INTENSITY_RANGE = (0.7, 1.3)


def flip_sample(seed: int, stream: int, index: int, stamps: np.ndarray | None = None):
    """Sample ``index`` of the synthetic flip stream: a pure function of its key."""
    if stamps is None:
        stamps = glyph_stamps()
    rng = stream_rng(seed, 100, stream, index)
    base = int(rng.integers(0, 10))
    flip = int(rng.integers(0, 3))
    max_off = IMAGE_SIZE - stamps.shape[1]
    r, c = rng.integers(0, max_off + 1, size=2)
    intensity = rng.uniform(*INTENSITY_RANGE)
    image = np.zeros((IMAGE_SIZE, IMAGE_SIZE))
    image[r : r + 7, c : c + 7] = stamps[base] * intensity
    if flip == 1:
        image = image[::-1, :]
    elif flip == 2:
        image = image[:, ::-1]
    image = image + rng.normal(scale=PIXEL_NOISE, size=(IMAGE_SIZE, IMAGE_SIZE))
    return image, remap_label(base, flip), base, flip


def gen_flip_dataset(count: int, seed: int, stream: int = 0) -> FlipDataset:
    """Synthetic glyph samples: random offsets, flips, intensity and pixel noise.

    The noise level is part of the task definition; without it the shapes
    are trivially separable and any small classifier saturates.  Sample i
    depends only on (seed, stream, i), never on ``count``.
    """
    stamps = glyph_stamps()
    images = np.zeros((count, IMAGE_SIZE, IMAGE_SIZE))
    labels = np.empty(count, dtype=np.int64)
    base = np.empty(count, dtype=np.int64)
    flips = np.empty(count, dtype=np.int64)
    for i in range(count):
        images[i], labels[i], base[i], flips[i] = flip_sample(seed, stream, i, stamps)
    return FlipDataset(images, labels, base, flips)


def flip_dataset_from_arrays(images: np.ndarray, base_labels: np.ndarray, seed: int, stream: int = 0) -> FlipDataset:
    """Apply the flip/remap protocol to external images (e.g. parsed IDX files)."""
    rng = stream_rng(seed, 101, stream)
    count = images.shape[0]
    flips = rng.integers(0, 3, size=count)
    out = np.array(images, dtype=np.float64)
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        if flips[i] == 1:
            out[i] = out[i, ::-1, :]
        elif flips[i] == 2:
            out[i] = out[i, :, ::-1]
        labels[i] = remap_label(int(base_labels[i]), int(flips[i]))
    return FlipDataset(out, labels, np.asarray(base_labels, dtype=np.int64), flips)


# ---------------------------------------------------------------------------
# Spinor task

SPINOR_NOISE_MAX = 0.4


def _base_triangle() -> np.ndarray:
    return np.array(
        [
            [1.0, 0.0, 0.0],
            [-0.5, np.sqrt(3.0) / 2.0, 0.0],
            [-0.5, -np.sqrt(3.0) / 2.0, 0.0],
        ]
    )


def spinor_prototypes() -> list[dict]:
    """Four prototype samples with the required confusion structure.

    Classes 0 and 2 share the spatial shape A (unit equilateral triangle),
    classes 1 and 3 share shape B (a scaled, rotated copy); classes 0 and 1
    share the spinor assignment X, classes 2 and 3 share Y; the four target
    spinors are distinct.
    """
    shape_a = _base_triangle()
    spin = su2.UnitQuaternion(np.cos(0.2), np.sin(0.2) * np.array([0.0, 0.0, 1.0]))
    shape_b = 1.5 * _base_triangle() @ su2.quat_to_rotation(spin).T
    rt2 = np.sqrt(2.0)
    spinors_x = np.array([[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]], dtype=complex)
    spinors_y = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 1.0]], dtype=complex)
    # target-to-class assignment respects the reachable span of a single
    # spinor filter atom: {s} + {(v.sigma) s : v real} is only a 3-real-dim
    # subspace of C^2, and (1, i)/sqrt2 lies in it for s = (1, 0) but not
    # for s = (0, 1)
    targets = [
        np.array([1.0, 0.0], dtype=complex),
        np.array([1.0, 1.0j], dtype=complex) / rt2,
        np.array([1.0, 1.0], dtype=complex) / rt2,
        np.array([0.0, 1.0], dtype=complex),
    ]
    return [
        {"positions": shape_a, "spinors": spinors_x, "target": targets[0]},
        {"positions": shape_b, "spinors": spinors_x, "target": targets[1]},
        {"positions": shape_a, "spinors": spinors_y, "target": targets[2]},
        {"positions": shape_b, "spinors": spinors_y, "target": targets[3]},
    ]


@dataclass(frozen=True)
class SpinorDataset:
    positions: np.ndarray  # (n, 3, 3) real
    spinors: np.ndarray  # (n, 3, 2) complex
    targets: np.ndarray  # (n, 2) complex
    classes: np.ndarray  # (n,)


def spinor_sample(noise: float, seed: int, rotate: bool, stream: int, index: int, protos=None):
    """Sample ``index`` of the spinor stream: a pure function of its key."""
    if protos is None:
        protos = spinor_prototypes()
    rng = stream_rng(seed, 200, stream, index)
    c = int(rng.integers(0, 4))
    proto = protos[c]
    pos = proto["positions"] + noise * rng.normal(size=(3, 3))
    spin = proto["spinors"].copy()
    target = proto["target"].copy()
    if rotate:
        q = su2.random_unit_quaternion(rng)
        r = su2.quat_to_rotation(q)
        u = su2.wigner(0.5, q)
        pos = pos @ r.T
        spin = spin @ u.T
        target = u @ target
    return pos, spin, target, c


def gen_spinor_dataset(count: int, noise: float, seed: int, rotate: bool, stream: int = 0) -> SpinorDataset:
    """Noisy prototype samples; rotated (positions, spinors, targets) when asked."""
    if not 0.0 <= noise <= SPINOR_NOISE_MAX:
        raise ValueError(f"noise level {noise} outside [0, {SPINOR_NOISE_MAX}]")
    protos = spinor_prototypes()
    positions = np.empty((count, 3, 3))
    spinors = np.empty((count, 3, 2), dtype=complex)
    targets = np.empty((count, 2), dtype=complex)
    classes = np.empty(count, dtype=np.int64)
    for i in range(count):
        positions[i], spinors[i], targets[i], classes[i] = spinor_sample(noise, seed, rotate, stream, i, protos)
    return SpinorDataset(positions, spinors, targets, classes)
