"""Mode maps: slice-preserving transformations between tensors.

Data flows from ``source`` to ``target``. The point map is stored as a
function on target positions: ``target[t] = source[point(t)]``. This is
the direction in which unfolding is a genuine function (overlapping
patches send several target points to one source point).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mda import Mda


class ModeMapError(ValueError):
    pass


class ShapeError(ModeMapError):
    pass


@dataclass(frozen=True)
class Mmc:
    source_modes: tuple[int, ...]
    target_modes: tuple[int, ...]

    def __post_init__(self):
        if not self.source_modes or not self.target_modes:
            raise ModeMapError("MMC mode sets must be non-empty")


@dataclass
class ModeMap:
    source_shape: tuple[int, ...]
    target_shape: tuple[int, ...]
    target_index: np.ndarray  # (N, target order)
    source_index: np.ndarray  # (N, source order)
    components: list[Mmc] = field(default_factory=list)
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.source_shape = tuple(int(x) for x in self.source_shape)
        self.target_shape = tuple(int(x) for x in self.target_shape)
        self.target_index = np.asarray(self.target_index, dtype=np.int64).reshape(-1, len(self.target_shape))
        self.source_index = np.asarray(self.source_index, dtype=np.int64).reshape(-1, len(self.source_shape))
        if len(self.target_index) != len(self.source_index):
            raise ModeMapError("index lists differ in length")
        for arr, shape, side in ((self.target_index, self.target_shape, "target"), (self.source_index, self.source_shape, "source")):
            if arr.size and ((arr < 0).any() or (arr >= np.array(shape)).any()):
                raise ShapeError(f"{side} index out of range")

    def is_function(self) -> bool:
        flat = np.ravel_multi_index(self.target_index.T, self.target_shape) if len(self.target_index) else np.array([])
        return len(np.unique(flat)) == len(flat)

    def is_injective(self) -> bool:
        """True when no source point feeds two target points."""
        flat = np.ravel_multi_index(self.source_index.T, self.source_shape) if len(self.source_index) else np.array([])
        return len(np.unique(flat)) == len(flat)

    def apply(self, m: Mda) -> Mda:
        if m.shape != self.source_shape:
            raise ShapeError(f"mode map expects {self.source_shape}, got {m.shape}")
        data = np.zeros(self.target_shape + (m.depth,), dtype=m.dtype)
        slots = np.zeros(self.target_shape + (m.depth,), dtype=bool)
        t = tuple(self.target_index.T)
        s = tuple(self.source_index.T)
        data[t] = m.data[s]
        slots[t] = m.slots[s]
        return Mda(data, slots)

    def to_json(self) -> dict:
        if self.kind != "custom":
            return {"kind": self.kind, **self.params}
        return {
            "kind": "custom",
            "source_shape": list(self.source_shape),
            "target_shape": list(self.target_shape),
            "pairs": [[s.tolist(), t.tolist()] for s, t in zip(self.source_index, self.target_index)],
            "components": [[list(c.source_modes), list(c.target_modes)] for c in self.components],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModeMap":
        kind = obj.get("kind")
        try:
            if kind == "unfold":
                return unfold(obj["image_shape"], obj["patch"], obj["stride"])
            if kind == "permute":
                return permute(obj["shape"], obj["perm"])
            if kind == "flatten":
                return flatten(obj["shape"], obj.get("start", 0), obj.get("end", -1))
            if kind == "reshape":
                return reshape(obj["shape"], obj["new_shape"])
            if kind == "crop":
                return crop(obj["shape"], obj["start"], obj["new_shape"])
            if kind == "shift":
                return shift(obj["shape"], obj["axis"], obj.get("offset", 1))
            if kind == "unfold_axis":
                return unfold_axis(obj["shape"], obj["axis"], obj["patch"], obj.get("stride", 1))
            if kind == "custom":
                pairs = obj["pairs"]
                return cls(
                    obj["source_shape"],
                    obj["target_shape"],
                    [p[1] for p in pairs],
                    [p[0] for p in pairs],
                    [Mmc(tuple(a), tuple(b)) for a, b in obj.get("components", [])],
                )
        except (KeyError, TypeError, IndexError) as exc:
            raise ModeMapError(f"malformed mode map JSON: {exc}") from exc
        raise ModeMapError(f"unknown mode map kind {kind!r}")


def verify_mode_map(m: ModeMap) -> dict:
    """Each target slice over an MMC's target modes must draw from one
    source slice over its source modes."""
    violations = []
    if not m.is_function():
        violations.append({"component": None, "reason": "a target position has two preimages"})
    for k, c in enumerate(m.components):
        if max(c.source_modes) >= len(m.source_shape) or max(c.target_modes) >= len(m.target_shape):
            violations.append({"component": k, "reason": "mode out of range"})
            continue
        t_out = [d for d in range(len(m.target_shape)) if d not in c.target_modes]
        s_out = [d for d in range(len(m.source_shape)) if d not in c.source_modes]
        seen: dict = {}
        bad: dict = {}
        for t, s in zip(m.target_index[:, t_out].tolist(), m.source_index[:, s_out].tolist()):
            key, val = tuple(t), tuple(s)
            prev = seen.setdefault(key, val)
            if prev != val:
                bad.setdefault(key, {prev}).add(val)
        for key, vals in bad.items():
            violations.append({"component": k, "target_slice": list(key), "source_slices": sorted(list(v) for v in vals)})
    return {"ok": not violations, "violations": violations}


def _grid(shape) -> np.ndarray:
    return np.array(list(np.ndindex(*shape)), dtype=np.int64).reshape(-1, len(shape))


def unfold(image_shape: Sequence[int], patch: Sequence[int], stride: Sequence[int]) -> ModeMap:
    """(C,H,W) -> (C,h',w',p_h,p_w) with valid padding."""
    C, H, W = (int(x) for x in image_shape)
    ph, pw = (int(x) for x in patch)
    sh, sw = (int(x) for x in stride)
    if ph > H or pw > W or ph < 1 or pw < 1:
        raise ShapeError(f"patch {(ph, pw)} does not fit image {(H, W)}")
    if sh < 1 or sw < 1:
        raise ShapeError("strides must be positive")
    hp, wp = (H - ph) // sh + 1, (W - pw) // sw + 1
    target = (C, hp, wp, ph, pw)
    t = _grid(target)
    s = np.stack([t[:, 0], t[:, 1] * sh + t[:, 3], t[:, 2] * sw + t[:, 4]], axis=1)
    comps = [Mmc((0,), (0,)), Mmc((1,), (1, 3)), Mmc((2,), (2, 4))]
    params = {"image_shape": [C, H, W], "patch": [ph, pw], "stride": [sh, sw]}
    return ModeMap((C, H, W), target, t, s, comps, "unfold", params)


def permute(shape: Sequence[int], perm: Sequence[int]) -> ModeMap:
    """Target mode k is source mode ``perm[k]``."""
    shape = tuple(int(x) for x in shape)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(shape))):
        raise ShapeError(f"{perm} is not a permutation of {len(shape)} modes")
    target = tuple(shape[p] for p in perm)
    t = _grid(target)
    s = np.empty_like(t)
    for k, p in enumerate(perm):
        s[:, p] = t[:, k]
    comps = [Mmc((p,), (k,)) for k, p in enumerate(perm)]
    return ModeMap(shape, target, t, s, comps, "permute", {"shape": list(shape), "perm": perm})


def flatten(shape: Sequence[int], start: int = 0, end: int = -1) -> ModeMap:
    """Merge modes ``start..end`` (inclusive) into one, row-major."""
    shape = tuple(int(x) for x in shape)
    n = len(shape)
    a, b = start % n, end % n
    if a > b:
        raise ShapeError("start must not exceed end")
    target = shape[:a] + (int(np.prod(shape[a : b + 1])),) + shape[b + 1 :]
    s = _grid(shape)
    merged = np.ravel_multi_index(s[:, a : b + 1].T, shape[a : b + 1]) if b >= a else np.zeros(len(s), dtype=np.int64)
    t = np.concatenate([s[:, :a], merged[:, None], s[:, b + 1 :]], axis=1)
    comps = [Mmc((d,), (d,)) for d in range(a)]
    comps.append(Mmc(tuple(range(a, b + 1)), (a,)))
    comps += [Mmc((d,), (d - (b - a),)) for d in range(b + 1, n)]
    return ModeMap(shape, target, t, s, comps, "flatten", {"shape": list(shape), "start": a, "end": b})


def reshape(shape: Sequence[int], new_shape: Sequence[int]) -> ModeMap:
    shape = tuple(int(x) for x in shape)
    new_shape = tuple(int(x) for x in new_shape)
    if int(np.prod(shape)) != int(np.prod(new_shape)):
        raise ShapeError(f"cannot reshape {shape} into {new_shape}")
    t = _grid(new_shape)
    flat = np.ravel_multi_index(t.T, new_shape)
    s = np.stack(np.unravel_index(flat, shape), axis=1).reshape(-1, len(shape))
    comps = [Mmc(tuple(range(len(shape))), tuple(range(len(new_shape))))]
    return ModeMap(shape, new_shape, t, s, comps, "reshape", {"shape": list(shape), "new_shape": list(new_shape)})


def crop(shape: Sequence[int], start: Sequence[int], new_shape: Sequence[int]) -> ModeMap:
    """Window ``start : start + new_shape`` of every mode."""
    shape = tuple(int(x) for x in shape)
    start = tuple(int(x) for x in start)
    new_shape = tuple(int(x) for x in new_shape)
    if not (len(shape) == len(start) == len(new_shape)):
        raise ShapeError("crop needs one start and size per mode")
    if any(a < 0 or n < 1 or a + n > d for a, n, d in zip(start, new_shape, shape)):
        raise ShapeError(f"window {start}+{new_shape} leaves {shape}")
    t = _grid(new_shape)
    s = t + np.array(start, dtype=np.int64)
    comps = [Mmc((d,), (d,)) for d in range(len(shape))]
    params = {"shape": list(shape), "start": list(start), "new_shape": list(new_shape)}
    return ModeMap(shape, new_shape, t, s, comps, "crop", params)


def shift(shape: Sequence[int], axis: int, offset: int = 1) -> ModeMap:
    """``target[.., m, ..] = source[.., m - offset, ..]``; uncovered positions stay absent."""
    shape = tuple(int(x) for x in shape)
    if not 0 <= axis < len(shape):
        raise ShapeError(f"axis {axis} out of range")
    t = _grid(shape)
    s = t.copy()
    s[:, axis] -= int(offset)
    keep = (s[:, axis] >= 0) & (s[:, axis] < shape[axis])
    comps = [Mmc((d,), (d,)) for d in range(len(shape))]
    params = {"shape": list(shape), "axis": int(axis), "offset": int(offset)}
    return ModeMap(shape, shape, t[keep], s[keep], comps, "shift", params)


def unfold_axis(shape: Sequence[int], axis: int, patch: int, stride: int = 1) -> ModeMap:
    """Sliding windows along one mode: that mode becomes (windows, patch)."""
    shape = tuple(int(x) for x in shape)
    if not 0 <= axis < len(shape) or not 1 <= patch <= shape[axis] or stride < 1:
        raise ShapeError(f"cannot unfold mode {axis} of {shape} with patch {patch}")
    n = (shape[axis] - patch) // stride + 1
    target = shape[:axis] + (n, patch) + shape[axis + 1 :]
    t = _grid(target)
    pos = t[:, axis] * stride + t[:, axis + 1]
    s = np.concatenate([t[:, :axis], pos[:, None], t[:, axis + 2 :]], axis=1)
    comps = [Mmc((d,), (d,)) for d in range(axis)]
    comps.append(Mmc((axis,), (axis, axis + 1)))
    comps += [Mmc((d,), (d + 1,)) for d in range(axis + 1, len(shape))]
    params = {"shape": list(shape), "axis": int(axis), "patch": int(patch), "stride": int(stride)}
    return ModeMap(shape, target, t, s, comps, "unfold_axis", params)


def compose(first: ModeMap, second: ModeMap, components: Sequence[Mmc] = ()) -> ModeMap:
    """Apply ``first`` then ``second``."""
    if first.target_shape != second.source_shape:
        raise ShapeError("shapes do not chain")
    lookup = {tuple(t): s for t, s in zip(first.target_index.tolist(), first.source_index.tolist())}
    keep_t, keep_s = [], []
    for t, mid in zip(second.target_index.tolist(), second.source_index.tolist()):
        if tuple(mid) in lookup:
            keep_t.append(t)
            keep_s.append(lookup[tuple(mid)])
    return ModeMap(first.source_shape, second.target_shape, keep_t, keep_s, list(components))


def noninjective_as_modemap(m: Mda):
    """Split ``m`` into an injective position tensor, a value vector and the
    collapsing mode map from the vector onto ``m``'s grid."""
    from .pwohg import gt_from_mda

    if m.is_hyper():
        raise ModeMapError("hyper arrays are not supported")
    pres = m.present
    vals = m.scalars()
    uniq: list = []
    where: dict = {}
    t_idx, s_idx = [], []
    for ix in np.ndindex(m.shape):
        if not pres[ix]:
            continue
        v = vals[ix]
        key = v.item() if isinstance(v, np.generic) else v
        if key not in where:
            where[key] = len(uniq)
            uniq.append(v)
        t_idx.append(ix)
        s_idx.append((where[key],))
    vector = Mda.from_array(np.array(uniq, dtype=m.dtype))
    positions = np.arange(int(np.prod(m.shape))).reshape(m.shape)
    index_gt = gt_from_mda(Mda.from_array(positions.astype(object)))
    comp = Mmc((0,), tuple(range(m.order)))
    mm = ModeMap((len(uniq),), m.shape, t_idx, s_idx, [comp])
    return index_gt, vector, mm
