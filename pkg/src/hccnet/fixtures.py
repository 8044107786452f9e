"""Reference architecture encodings.

Each builder returns a :class:`~hccnet.network.Tem`. Convolutions use
valid padding, so residual and Hadamard partners of a convolution output
are centre-cropped by a packaging mode map (packaging tensors share their
source's elements and are not counted in C_T). Weight layouts put the
output channel first so convolution outputs stay channel-first.
"""
from __future__ import annotations

import json
from importlib import resources

from .modemap import crop, shift, unfold, unfold_axis
from .network import ActRow, MapRow, OpRow, Tem, TensorCol
from .ops import Tom
from .pwohg import Pwohg

# Reference complexity signatures (C_op, C_T, C_alpha, C_O, C_A) per core block.
REFERENCE_SIGNATURES = {
    "fcnn": (1, 2, 2, 3, 2),
    "cnn": (1, 2, 2, 6, 2),
    "resnet": (3, 6, 2, 6, 2),
    "transformer": (3, 7, 3, 4, 2),
    "polynet": (4, 9, 3, 6, 2),
    "monet": (4, 9, 4, 4, 2),
    "vim": (27, 45, 3, 4, 2),
    "ttnet": (5, 11, 3, 6, 3),
}

RED_STAR_PARAMS = 46342


class _Builder:
    def __init__(self):
        self.tem = Tem()

    def shape(self, name):
        return self.tem.tensor(name).shape

    def add(self, name, role, shape):
        self.tem.tensors.append(TensorCol(name, role, shape))
        return name

    def op(self, spec, inputs, output, ops="mul_add", role="intermediate"):
        lhs, rhs = spec.replace(" ", "").split("->")
        sizes = {}
        for letters, name in zip(lhs.split(","), inputs):
            shp = self.shape(name)
            if len(letters) != len(shp):
                raise ValueError(f"{name}: {letters!r} vs shape {shp}")
            for ch, d in zip(letters, shp):
                if sizes.setdefault(ch, d) != d:
                    raise ValueError(f"mode {ch!r} sized {sizes[ch]} and {d}")
        self.add(output, role, tuple(sizes[ch] for ch in rhs))
        self.tem.rows.append(OpRow(Tom.from_einsum(spec, base_ops=ops), list(inputs), output))
        return output

    def act(self, kind, target, axis=None, **params):
        self.tem.rows.append(ActRow(kind, target, axis, params))

    def pack(self, modemap, source, output):
        self.add(output, "intermediate", modemap.target_shape)
        self.tem.rows.append(MapRow(modemap, source, output))
        return output

    def conv(self, source, weight, output, ops="mul_add", role="intermediate", patch=(3, 3)):
        """Unfold ``source`` (c,h,w) then contract with weight (c',c,p_h,p_w)."""
        unf = self.pack(unfold(self.shape(source), patch, (1, 1)), source, f"{source}_unf")
        return self.op("chwpq,ocpq->ohw", [unf, weight], output, ops, role)

    def centre(self, source, like, output):
        src, dst = self.shape(source), self.shape(like)
        start = [(a - b) // 2 for a, b in zip(src, dst)]
        return self.pack(crop(src, start, dst), source, output)

    def done(self, notes=""):
        self.tem.notes = notes
        return self.tem


def fcnn(n=8, d=16, d_out=10) -> Tem:
    b = _Builder()
    b.add("X", "input", (n, d))
    b.add("W", "weight", (d, d_out))
    b.op("nd,de->ne", ["X", "W"], "Y", role="output")
    return b.done(
        "One matrix-multiply layer. The reference signature has C_T = 2; the three "
        "distinct base sets X, W, Y give 3 here."
    )


def cnn(c=3, hw=8, c_out=4, patch=3) -> Tem:
    b = _Builder()
    b.add("X", "input", (c, hw, hw))
    b.add("W", "weight", (c_out, c, patch, patch))
    b.conv("X", "W", "Y", role="output", patch=(patch, patch))
    return b.done(
        "Unfold mode map then one binary contraction. The reference signature has "
        "C_T = 2; counting X, W, Y (the unfolded view is packaging) gives 3."
    )


def resnet(c=4, hw=10, patch=3) -> Tem:
    b = _Builder()
    b.add("X", "input", (c, hw, hw))
    b.add("W1", "weight", (c, c, patch, patch))
    b.add("W2", "weight", (c, c, patch, patch))
    b.conv("X", "W1", "Z1")
    b.act("leaky_relu", "Z1", slope=0.0)
    b.conv("Z1", "W2", "Z2")
    b.centre("X", "Z2", "X_crop")
    b.op("chw,chw->chw", ["X_crop", "Z2"], "Y", ops="add_add", role="output")
    return b.done("Residual block; the skip path is centre-cropped to the valid-convolution size.")


def transformer(n=6, d=8, d_k=4, d_v=5) -> Tem:
    b = _Builder()
    b.add("X", "input", (n, d))
    for w, shp in (("W_Q", (d, d_k)), ("W_K", (d, d_k)), ("W_V", (d, d_v))):
        b.add(w, "weight", shp)
    b.op("nd,de->ne", ["X", "W_Q"], "Z_Q")
    b.op("ne,md,de->nm", ["Z_Q", "X", "W_K"], "A")
    b.act("softmax", "A", [1])
    b.op("nm,md,df->nf", ["A", "X", "W_V"], "Y", role="output")
    return b.done("Self-attention: Z_Q = X W_Q, A = Z_Q (X W_K)^T, Y = A (X W_V).")


def polynet(c=3, hw=10, c_out=4, patch=3) -> Tem:
    b = _Builder()
    b.add("X", "input", (c, hw, hw))
    for w in ("W1", "W2", "W3"):
        b.add(w, "weight", (c_out, c, patch, patch))
    b.add("W4", "weight", (c_out, c_out, patch, patch))
    unf = b.pack(unfold((c, hw, hw), (patch, patch), (1, 1)), "X", "X_unf")
    b.op("chwpq,ocpq->ohw", [unf, "W1"], "Z1")
    b.op("chwpq,ocpq->ohw", [unf, "W2"], "Z2")
    b.op("ohw,chwpq,ocpq->ohw", ["Z1", unf, "W3"], "Z3")
    z3u = b.pack(unfold(b.shape("Z3"), (patch, patch), (1, 1)), "Z3", "Z3_unf")
    z3u_out = b.shape(z3u)[1:3]
    off = (patch - 1) // 2
    b.pack(crop(b.shape("Z2"), (0, off, off), (c_out,) + z3u_out), "Z2", "Z2_crop")
    b.op("ohw,chwpq,ocpq->ohw", ["Z2_crop", z3u, "W4"], "Y", role="output")
    return b.done("Pi-net V1 block: Z3 = Z1 (X * W3), Y = Z2 (Z3 * W4), with Hadamard products merged into the convolutions.")


def monet(n=6, d=8, m=5, l=3, o=4) -> Tem:
    b = _Builder()
    b.add("X", "input", (n, d))
    for w, shp in (("W_A", (d, m)), ("W_B", (d, l)), ("W_D", (l, m)), ("W_C", (m, o))):
        b.add(w, "weight", shp)
    b.op("nd,dm->nm", ["X", "W_A"], "Z1")
    b.op("nm,nd,dl,lm->nm", ["Z1", "X", "W_B", "W_D"], "Z2")
    b.op("nm,nm->nm", ["Z2", "Z1"], "Z3", ops="add_add")
    b.op("nm,mo->no", ["Z3", "W_C"], "Y", role="output")
    return b.done("Multilinear block: Z2 = Z1 (X W_B W_D) as one arity-4 operation.")


def ttnet(c=4, hw=10, patch=3) -> Tem:
    b = _Builder()
    b.add("X", "input", (c, hw, hw))
    b.add("W_C1", "weight", (c, patch, patch))
    b.add("W_L1", "weight", (c, c))
    b.add("W_L2", "weight", (c, c))
    b.add("W_C2", "weight", (c, patch, patch))
    b.add("W_L3", "weight", (c, c))
    unf = b.pack(unfold((c, hw, hw), (patch, patch), (1, 1)), "X", "X_unf")
    b.op("chwpq,cpq,oc->ohw", [unf, "W_C1", "W_L1"], "Z1")
    b.op("chw,oc->ohw", ["X", "W_L2"], "Z2")
    z2u = b.pack(unfold(b.shape("Z2"), (patch, patch), (1, 1)), "Z2", "Z2_unf")
    b.op("chwpq,cpq,chw->chw", [z2u, "W_C2", "Z1"], "Z3")
    b.op("chw,oc->ohw", ["Z3", "W_L3"], "Z4")
    b.centre("X", "Z4", "X_crop")
    b.op("chw,chw->chw", ["X_crop", "Z4"], "Y", ops="add_add", role="output")
    return b.done("Attention-interaction module: depthwise convolutions couple the channel mode without contracting it.")


def vim(m=8, d=6, e=8, n=4, k=3) -> Tem:
    """One loop iteration of the bidirectional state-space block.

    The hidden state is tensorized over tokens; its previous-step view is a
    shift packaging map of the same column, so the system is recurrent and
    only suitable for signature computation.
    """
    b = _Builder()
    b.add("X", "input", (m, d))
    for w, shp in (("W_x", (d, e)), ("W_z", (d, e)), ("W_T", (e, d))):
        b.add(w, "weight", shp)
    b.act("layer_norm", "X", [1])
    b.op("md,de->me", ["X", "W_x"], "x")
    b.op("md,de->me", ["X", "W_z"], "z")
    b.act("silu", "z")
    mp = m - k + 1
    zc = b.pack(crop((m, e), (k - 1, 0), (mp, e)), "z", "z_crop")
    gated = []
    for o in ("f", "b"):
        for w, shp in (
            (f"W_conv_{o}", (k, e)),
            (f"b_conv_{o}", (e,)),
            (f"W_dt_{o}", (e, e)),
            (f"P_dt_{o}", (e,)),
            (f"A_{o}", (e, n)),
            (f"W_B_{o}", (e, n)),
            (f"W_C_{o}", (e, n)),
        ):
            b.add(w, "weight", shp)
        xu = b.pack(unfold_axis((m, e), 0, k), "x", f"x_unf_{o}")
        b.op("mke,ke->me", [xu, f"W_conv_{o}"], f"xc_{o}")
        xp = b.op("me,e->me", [f"xc_{o}", f"b_conv_{o}"], f"xp_{o}", ops="add_add")
        b.act("silu", xp)
        b.op("me,ef->mf", [xp, f"W_dt_{o}"], f"dl_{o}")
        dt = b.op("me,e->me", [f"dl_{o}", f"P_dt_{o}"], f"dt_{o}", ops="add_add")
        b.act("softplus", dt)
        b.op("me,en->men", [dt, f"A_{o}"], f"Abar_{o}")
        b.op("me,mf,fn->men", [dt, xp, f"W_B_{o}"], f"Bbar_{o}")
        # the state column is declared before its producer so the shift view can exist
        h_shape = (mp, e, n)
        b.add(f"h_prev_{o}", "intermediate", h_shape)
        b.op("men,men->men", [f"Abar_{o}", f"h_prev_{o}"], f"t1_{o}")
        b.op("men,me->men", [f"Bbar_{o}", xp], f"t2_{o}")
        b.op("men,men->men", [f"t1_{o}", f"t2_{o}"], f"h_{o}", ops="add_add")
        b.tem.rows.append(MapRow(shift(h_shape, 0), f"h_{o}", f"h_prev_{o}"))
        b.op("men,mf,fn->me", [f"h_{o}", xp, f"W_C_{o}"], f"y_{o}")
        gated.append(b.op("me,me->me", [f"y_{o}", zc], f"yg_{o}"))
    b.op("me,me->me", gated, "s", ops="add_add")
    b.op("me,ed->md", ["s", "W_T"], "o")
    xc = b.pack(crop((m, d), (k - 1, 0), (mp, d)), "X", "X_crop")
    b.op("md,md->md", ["o", xc], "Y", ops="add_add", role="output")
    return b.done(
        "One iteration of the bidirectional SSM block (27 operations). Norm is an "
        "in-place activation like every other activation here, and the hidden "
        "state is one tensorized column whose previous step is a shift view, so "
        "45 tensors are counted. The system is recurrent: validate_tem reports the "
        "cycle and forward is not supported. Both directions share the forward "
        "token order; the backward reversal is a packaging detail omitted here."
    )


def red_star(a=2, b_=32, c=4, d=3, i2=128, l=4, q=6) -> Tem:
    """Sampled block with weight-tied W3/W6; X has shape (a, b, c, d, c)."""
    b = _Builder()
    b.add("X", "input", (a, b_, c, d, c))
    for w, shp in (
        ("W1", (b_, d, c)),
        ("W2", (c, c)),
        ("W3", (b_, d)),
        ("W4", (i2, c)),
        ("W5", (a, d, d)),
        ("W6", (i2, l, c, q)),
        ("W7", (b_, i2, a, c)),
    ):
        b.add(w, "weight", shp)
    b.op("jklmn,kmn,ln,im->jl", ["X", "W1", "W2", "W3"], "Z1")
    b.op("jklmn,il->ijkmn", ["X", "W4"], "Z2")
    b.act("layer_norm", "Z2", [1])
    b.op("ko,ijkmp,jmo,ilnq->klnpq", ["W3", "Z2", "W5", "W6"], "Z3")
    b.op("ln,jkno,ikmno,ijlm->in", ["Z1", "W6", "Z3", "W7"], "Z4", role="output")
    b.act("layer_norm", "Z4", None)
    return b.done("Sampled block with two layer norms; W3 and W6 are each used by two operations.")


def polynets_core(n=2) -> Tem:
    """Z1 = X W1, Z2 = X W2, Y = Z1 ⊙ Z2."""
    b = _Builder()
    b.add("X", "input", (n, n))
    b.add("W1", "weight", (n, n))
    b.add("W2", "weight", (n, n))
    b.op("ij,jk->ik", ["X", "W1"], "Z1")
    b.op("ij,jk->ik", ["X", "W2"], "Z2")
    b.op("ik,ik->ik", ["Z1", "Z2"], "Y", role="output")
    return b.done()


BUILDERS = {
    "fcnn": fcnn,
    "cnn": cnn,
    "resnet": resnet,
    "transformer": transformer,
    "polynet": polynet,
    "monet": monet,
    "vim": vim,
    "ttnet": ttnet,
    "red_star": red_star,
    "polynets_core": polynets_core,
}


def _singletons(*edges):
    return [[[v] for v in e] for e in edges]


def cube_gt() -> Pwohg:
    """2×2×2 cube with modes r, g, b over A..H."""
    return Pwohg.build([
        ("r", _singletons("AB", "CD", "EF", "GH")),
        ("g", _singletons("AC", "BD", "EG", "FH")),
        ("b", _singletons("AE", "BF", "CG", "DH")),
    ])


def degenerate_gt() -> Pwohg:
    """Four ordered 1-cells whose orders contradict each other."""
    return Pwohg.build([("m0", _singletons("AB", "CD")), ("m1", _singletons("AC", "DB"))])


def split_edge_gt() -> Pwohg:
    """Equivalent to a 2×3 array but with [A,B,C] split into [A,B],[B,C]."""
    return Pwohg.build([("m0", _singletons("AB", "BC", "DEF")), ("m1", _singletons("AD", "BE", "CF"))])


GT_BUILDERS = {"cube": cube_gt, "degenerate": degenerate_gt, "split_edge": split_edge_gt}


def build(name: str) -> Tem:
    return BUILDERS[name]()


def load(name: str):
    """Read the packaged JSON copy of a fixture (a Tem or a Pwohg)."""
    obj = json.loads(fixture_path(name).read_text())
    return Pwohg.from_json(obj) if name in GT_BUILDERS else Tem.from_json(obj)


def fixture_path(name: str):
    return resources.files("hccnet").joinpath("fixtures").joinpath(f"{name}.json")


def write_all(directory) -> list[str]:
    """Regenerate every packaged fixture file from its builder."""
    from pathlib import Path

    from .jsonio import write

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for name, fn in {**BUILDERS, **GT_BUILDERS}.items():
        write(out / f"{name}.json", fn().to_json())
        names.append(name)
    return names
