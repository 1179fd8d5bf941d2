"""Block architecture: Hodge-Laplacian filter layers, cross-dimensional
interaction and attention pooling, followed by a mean readout and a dense head.

Signals live on nodes (dimension 0) and edges (dimension 1); higher simplices
only shape the operators and the coarsening.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .complex import SimplicialComplex
from .pooling import AttentionParams, NodeClustering, attention_weights, cluster_nodes, downsample, pool_signals
from .projection import MSIWeights, msi_forward, project_chain
from .spectral import FilterBank, eigensystem, filter_poly, hodge_laplacian

DIMS = (0, 1)


@dataclass
class ModelConfig:
    """Architecture hyperparameters.

    ``use_edges``, ``use_msi`` and ``pooling_enabled`` switch the stages
    compared in the ablation presets (see :func:`ablation_config`).
    ``dropout`` is recorded only; inference ignores it.
    """

    num_blocks: int = 2
    conv_layers_per_block: list[int] = field(default_factory=lambda: [2, 2])
    filters_per_layer: list[int] = field(default_factory=lambda: [16, 32])
    poly_order: int = 3
    qk_dim: int = 32
    fc_layers: list[int] = field(default_factory=lambda: [64, 1])
    alpha: dict[int, float] = field(default_factory=lambda: {0: 0.5, 1: 0.5})
    activation: str = "relu"
    pooling_enabled: list[bool] = field(default_factory=lambda: [True, True])
    max_dim: int = 2
    pe_dims: tuple[int, int] = (0, 8)
    node_in: int = 1
    edge_in: int = 1
    use_edges: bool = True
    use_msi: bool = True
    clustering: str = "graclus"
    normalize_laplacian: bool = False
    dropout: float = 0.25

    def __post_init__(self):
        self.alpha = {int(k): float(v) for k, v in self.alpha.items()}
        self.pe_dims = tuple(int(v) for v in self.pe_dims)
        self.validate()

    def validate(self) -> None:
        n = self.num_blocks
        if n < 1:
            raise ValueError("num_blocks must be at least 1")
        for name in ("conv_layers_per_block", "filters_per_layer", "pooling_enabled"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, num_blocks is {n}")
        counts = list(self.conv_layers_per_block) + list(self.filters_per_layer) + list(self.fc_layers)
        if any(v < 1 for v in counts) or self.poly_order < 1 or self.qk_dim < 1:
            raise ValueError("layer counts, widths, poly_order and qk_dim must be at least 1")
        if not self.fc_layers:
            raise ValueError("fc_layers needs at least the output width")
        if self.activation not in ("relu", "leaky_relu"):
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.clustering not in ("graclus", "identity"):
            raise ValueError(f"unknown clustering {self.clustering!r}")
        if (self.use_msi or any(self.pooling_enabled)) and not self.use_edges:
            raise ValueError("interaction and pooling need the edge branch")
        if self.max_dim < 1 and self.use_edges:
            raise ValueError("the edge branch needs max_dim >= 1")

    @property
    def node_width(self) -> int:
        return self.node_in + self.pe_dims[0]

    @property
    def edge_width(self) -> int:
        return self.edge_in + self.pe_dims[1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha"] = {str(k): v for k, v in self.alpha.items()}
        d["pe_dims"] = list(self.pe_dims)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)


def ablation_config(name: str, **overrides) -> ModelConfig:
    """Presets M1..M4: node filters only, plus edge filters, plus interaction,
    plus pooling."""
    presets = {
        "M1": dict(use_edges=False, use_msi=False, pool=False),
        "M2": dict(use_edges=True, use_msi=False, pool=False),
        "M3": dict(use_edges=True, use_msi=True, pool=False),
        "M4": dict(use_edges=True, use_msi=True, pool=True),
    }
    if name not in presets:
        raise ValueError(f"unknown ablation {name!r}")
    p = presets[name]
    cfg = dict(use_edges=p["use_edges"], use_msi=p["use_msi"])
    cfg.update(overrides)
    if "pooling_enabled" not in overrides:
        cfg["pooling_enabled"] = [p["pool"]] * cfg.get("num_blocks", ModelConfig.num_blocks)
    return ModelConfig(**cfg)


@dataclass
class BlockParams:
    filters: dict[int, list[FilterBank]]
    msi: MSIWeights | None = None
    attention: AttentionParams | None = None


@dataclass
class ModelParams:
    blocks: list[BlockParams]
    head_weights: list[np.ndarray]
    head_biases: list[np.ndarray]


def _activation(cfg: ModelConfig):
    if cfg.activation == "leaky_relu":
        return lambda x: np.where(x >= 0, x, 0.1 * x)
    return lambda x: np.maximum(x, 0.0)


def _uniform(rng, shape, fan_in):
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def init_params(cfg: ModelConfig, seed: int = 0) -> ModelParams:
    """Seeded uniform ``[-1/sqrt(d), 1/sqrt(d)]`` initialization, ``d`` the fan-in."""
    rng = np.random.default_rng(seed)
    dims = DIMS if cfg.use_edges else (0,)
    widths = {0: cfg.node_width, 1: cfg.edge_width}
    blocks = []
    for b in range(cfg.num_blocks):
        d = cfg.filters_per_layer[b]
        filters = {}
        for k in dims:
            layers = []
            d_in = widths[k]
            for _ in range(cfg.conv_layers_per_block[b]):
                theta = _uniform(rng, (cfg.poly_order, d_in, d), d_in * cfg.poly_order)
                layers.append(FilterBank(k, theta))
                d_in = d
            filters[k] = layers
            widths[k] = d
        msi = att = None
        if cfg.use_msi:
            msi = MSIWeights(
                {k: _uniform(rng, (2 * d, d), 2 * d) for k in DIMS},
                {k: _uniform(rng, (d, d), d) for k in DIMS},
            )
        if cfg.pooling_enabled[b]:
            att = AttentionParams(
                {k: _uniform(rng, (d, cfg.qk_dim), d) for k in DIMS},
                {k: _uniform(rng, (d, cfg.qk_dim), d) for k in DIMS},
                {k: cfg.alpha.get(k, 0.5) for k in DIMS},
            )
        blocks.append(BlockParams(filters, msi, att))
    head_in = sum(widths[k] for k in dims)
    weights, biases = [], []
    for width in cfg.fc_layers:
        weights.append(_uniform(rng, (head_in, width), head_in))
        biases.append(_uniform(rng, (width,), head_in))
        head_in = width
    return ModelParams(blocks, weights, biases)


def positional_encoding(c: SimplicialComplex, cfg: ModelConfig, flip_seed: int | None = None):
    """Low Hodge-Laplacian eigenvectors as node and edge features.

    Node encodings skip the lowest (constant) eigenvector of the graph
    Laplacian; edge encodings take the lowest ``pe_dims[1]`` eigenvectors of
    the edge Laplacian. Missing columns are zero-padded. When ``flip_seed`` is
    given every column is multiplied by a seeded random sign.
    """
    node_count, edge_count = cfg.pe_dims
    rng = np.random.default_rng(flip_seed) if flip_seed is not None else None

    def block(k, count, skip):
        n = c.num(k)
        out = np.zeros((n, count))
        if n == 0 or count == 0:
            return out
        take = min(count, n - skip)
        if take > 0:
            es = eigensystem(hodge_laplacian(c, k), skip + take)
            out[:, :take] = es.eigenvectors[:, skip:]
        if rng is not None:
            out *= rng.choice([-1.0, 1.0], size=count)
        return out

    node_pe = block(0, node_count, 1)
    edge_pe = block(1, edge_count, 0) if c.max_dim >= 1 else np.zeros((0, edge_count))
    return node_pe, edge_pe


class ShapeError(ValueError):
    """Raised with block/layer coordinates when a tensor does not fit."""


def forward(c: SimplicialComplex, x0, x1, params: ModelParams, cfg: ModelConfig,
            flip_seed: int | None = None, trace: list | None = None) -> np.ndarray:
    """Run the network on one complex and return the head's output vector.

    Raw signals are extended with positional encodings before the first
    block. ``trace``, when given, collects ``(stage, block, x0, x1)`` tuples.
    """
    act = _activation(cfg)
    x0 = np.asarray(x0, dtype=np.float64).reshape(c.num(0), -1)
    if x0.shape[1] != cfg.node_in:
        raise ShapeError(f"input: node signal width {x0.shape[1]}, config expects {cfg.node_in}")
    if cfg.use_edges:
        x1 = np.asarray(x1, dtype=np.float64).reshape(c.num(1), -1)
        if x1.shape[1] != cfg.edge_in:
            raise ShapeError(f"input: edge signal width {x1.shape[1]}, config expects {cfg.edge_in}")
    node_pe, edge_pe = positional_encoding(c, cfg, flip_seed)
    x0 = np.hstack([x0, node_pe])
    if cfg.use_edges:
        x1 = np.hstack([x1, edge_pe])
    if len(params.blocks) != cfg.num_blocks:
        raise ShapeError(f"params have {len(params.blocks)} blocks, config has {cfg.num_blocks}")

    for b, bp in enumerate(params.blocks):
        xs = {0: x0, 1: x1}
        for k in (DIMS if cfg.use_edges else (0,)):
            lap = hodge_laplacian(c, k, cfg.normalize_laplacian)
            layers = bp.filters.get(k, [])
            if len(layers) != cfg.conv_layers_per_block[b]:
                raise ShapeError(
                    f"block {b}: {len(layers)} filter layers on dimension {k}, "
                    f"config expects {cfg.conv_layers_per_block[b]}"
                )
            for i, fb in enumerate(layers):
                try:
                    xs[k] = act(filter_poly(lap, fb, xs[k]))
                except ValueError as exc:
                    raise ShapeError(f"block {b}, layer {i}, dimension {k}: {exc}") from None
        x0, x1 = xs[0], xs[1]
        if trace is not None:
            trace.append(("filter", b, x0, x1))
        if not cfg.use_edges:
            continue
        ops = (project_chain(c, 1, 0), project_chain(c, 0, 1))
        if cfg.use_msi:
            if bp.msi is None:
                raise ShapeError(f"block {b}: missing interaction weights")
            try:
                x0, x1 = msi_forward(x0, x1, ops, bp.msi, DIMS)
            except ValueError as exc:
                raise ShapeError(f"block {b}, interaction: {exc}") from None
            if trace is not None:
                trace.append(("msi", b, x0, x1))
        if cfg.pooling_enabled[b]:
            if bp.attention is None:
                raise ShapeError(f"block {b}: missing attention parameters")
            try:
                a0, a1 = attention_weights(x0, x1, ops, bp.attention, DIMS)
            except ValueError as exc:
                raise ShapeError(f"block {b}, attention: {exc}") from None
            if cfg.clustering == "identity":
                nc = NodeClustering.identity(c.num(0))
            else:
                nc = cluster_nodes(c)
            res = downsample(c, nc)
            x0, x1 = pool_signals([x0, x1], [a0, a1], res.assignment[:2])
            c = res.coarse_complex
            if trace is not None:
                trace.append(("pool", b, x0, x1))

    feats = [_mean_rows(x0)]
    if cfg.use_edges:
        feats.append(_mean_rows(x1))
    h = np.concatenate(feats)
    n_fc = len(params.head_weights)
    if n_fc != len(cfg.fc_layers) or len(params.head_biases) != n_fc:
        raise ShapeError(f"head has {n_fc} layers, config expects {len(cfg.fc_layers)}")
    for i, (w, bias) in enumerate(zip(params.head_weights, params.head_biases)):
        if w.shape[0] != h.shape[0]:
            raise ShapeError(f"head layer {i}: input width {h.shape[0]}, weights expect {w.shape[0]}")
        h = h @ w + bias
        if i < n_fc - 1:
            h = act(h)
    return h


def _mean_rows(x: np.ndarray) -> np.ndarray:
    if x.shape[0] == 0:
        return np.zeros(x.shape[1])
    return x.mean(axis=0)


# --- parameter files -------------------------------------------------------

def _fmt(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite value {v}")
    s = format(v, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def dumps_json(obj, indent: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
        items = [f"{inner}{dumps_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]" if items else "[]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _tensor(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def params_to_dict(params: ModelParams) -> dict:
    blocks = []
    for bp in params.blocks:
        entry = {
            "filters": {str(k): [{"k": fb.k, "P": fb.P, "theta": _tensor(fb.theta)} for fb in layers]
                        for k, layers in bp.filters.items()},
            "msi": None,
            "attention": None,
        }
        if bp.msi is not None:
            entry["msi"] = {
                "hidden": {str(k): _tensor(v) for k, v in bp.msi.hidden.items()},
                "out": {str(k): _tensor(v) for k, v in bp.msi.out.items()},
            }
        if bp.attention is not None:
            att = bp.attention
            entry["attention"] = {
                "query": {str(k): _tensor(v) for k, v in att.query.items()},
                "key": {str(k): _tensor(v) for k, v in att.key.items()},
                "alpha": {str(k): float(v) for k, v in att.alpha.items()},
            }
        blocks.append(entry)
    return {
        "format": "simplexnet-params",
        "version": 1,
        "blocks": blocks,
        "head": {
            "weights": [_tensor(w) for w in params.head_weights],
            "biases": [_tensor(b) for b in params.head_biases],
        },
    }


def save_params(params: ModelParams, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(params_to_dict(params)))
        fh.write("\n")


class SchemaError(ValueError):
    """Parameter document does not match the expected layout."""


def _get(doc, key, path):
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected an object")
    if key not in doc:
        raise SchemaError(f"{path}: missing field '{key}'")
    return doc[key]


def _read_tensor(doc, path) -> np.ndarray:
    shape = _get(doc, "shape", path)
    data = _get(doc, "data", path)
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError):
        raise SchemaError(f"{path}.data: expected a flat list of numbers") from None
    if arr.ndim != 1 or arr.size != math.prod(shape):
        raise SchemaError(f"{path}: data has {arr.size} values, shape {shape} needs {math.prod(shape)}")
    return arr.reshape(shape)


def _dim_table(doc, path) -> dict[int, np.ndarray]:
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected an object keyed by dimension")
    return {int(k): _read_tensor(v, f"{path}.{k}") for k, v in doc.items()}


def params_from_dict(doc, cfg: ModelConfig | None = None) -> ModelParams:
    fmt = _get(doc, "format", "$")
    if fmt != "simplexnet-params":
        raise SchemaError(f"$.format: unexpected value {fmt!r}")
    blocks = []
    for b, bdoc in enumerate(_get(doc, "blocks", "$")):
        path = f"$.blocks[{b}]"
        fdoc = _get(bdoc, "filters", path)
        filters = {}
        for k, layers in fdoc.items():
            filters[int(k)] = []
            for i, ldoc in enumerate(layers):
                lp = f"{path}.filters.{k}[{i}]"
                theta = _read_tensor(_get(ldoc, "theta", lp), f"{lp}.theta")
                if theta.ndim != 3:
                    raise SchemaError(f"{lp}.theta: expected 3 axes, got shape {list(theta.shape)}")
                if int(_get(ldoc, "P", lp)) != theta.shape[0]:
                    raise SchemaError(f"{lp}.P: declares {ldoc['P']}, theta has {theta.shape[0]} terms")
                filters[int(k)].append(FilterBank(int(_get(ldoc, "k", lp)), theta))
        msi = att = None
        mdoc = _get(bdoc, "msi", path)
        if mdoc is not None:
            msi = MSIWeights(_dim_table(_get(mdoc, "hidden", f"{path}.msi"), f"{path}.msi.hidden"),
                             _dim_table(_get(mdoc, "out", f"{path}.msi"), f"{path}.msi.out"))
        adoc = _get(bdoc, "attention", path)
        if adoc is not None:
            ap = f"{path}.attention"
            alpha = _get(adoc, "alpha", ap)
            att = AttentionParams(_dim_table(_get(adoc, "query", ap), f"{ap}.query"),
                                  _dim_table(_get(adoc, "key", ap), f"{ap}.key"),
                                  {int(k): float(v) for k, v in alpha.items()})
        blocks.append(BlockParams(filters, msi, att))
    head = _get(doc, "head", "$")
    weights = [_read_tensor(w, f"$.head.weights[{i}]") for i, w in enumerate(_get(head, "weights", "$.head"))]
    biases = [_read_tensor(w, f"$.head.biases[{i}]") for i, w in enumerate(_get(head, "biases", "$.head"))]
    params = ModelParams(blocks, weights, biases)
    if cfg is not None:
        check_params(params, cfg)
    return params


def load_params(path, cfg: ModelConfig | None = None) -> ModelParams:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}") from None
    return params_from_dict(doc, cfg)


def check_params(params: ModelParams, cfg: ModelConfig) -> None:
    """Raise :class:`ShapeError` naming the first block or layer that does not fit ``cfg``."""
    if len(params.blocks) != cfg.num_blocks:
        raise ShapeError(f"params have {len(params.blocks)} blocks, config has {cfg.num_blocks}")
    dims = DIMS if cfg.use_edges else (0,)
    widths = {0: cfg.node_width, 1: cfg.edge_width}
    for b, bp in enumerate(params.blocks):
        d = cfg.filters_per_layer[b]
        for k in dims:
            layers = bp.filters.get(k)
            if layers is None:
                raise ShapeError(f"block {b}: no filters for dimension {k}")
            if len(layers) != cfg.conv_layers_per_block[b]:
                raise ShapeError(
                    f"block {b}: {len(layers)} filter layers on dimension {k}, "
                    f"config expects {cfg.conv_layers_per_block[b]}"
                )
            d_in = widths[k]
            for i, fb in enumerate(layers):
                want = (cfg.poly_order, d_in, d)
                if fb.theta.shape != want or fb.k != k:
                    raise ShapeError(
                        f"block {b}, layer {i}, dimension {k}: theta shape {fb.theta.shape}, expected {want}"
                    )
                d_in = d
            widths[k] = d
        if cfg.use_msi:
            if bp.msi is None:
                raise ShapeError(f"block {b}: missing interaction weights")
            for k in DIMS:
                if bp.msi.hidden[k].shape != (2 * d, d) or bp.msi.out[k].shape != (d, d):
                    raise ShapeError(f"block {b}: interaction weights for dimension {k} do not match width {d}")
        if cfg.pooling_enabled[b]:
            if bp.attention is None:
                raise ShapeError(f"block {b}: missing attention parameters")
            for k in DIMS:
                for name, table in (("query", bp.attention.query), ("key", bp.attention.key)):
                    if table[k].shape != (d, cfg.qk_dim):
                        raise ShapeError(
                            f"block {b}: {name} weights for dimension {k} have shape "
                            f"{table[k].shape}, expected {(d, cfg.qk_dim)}"
                        )
    head_in = sum(widths[k] for k in dims)
    if len(params.head_weights) != len(cfg.fc_layers):
        raise ShapeError(f"head has {len(params.head_weights)} layers, config expects {len(cfg.fc_layers)}")
    for i, (w, bias, width) in enumerate(zip(params.head_weights, params.head_biases, cfg.fc_layers)):
        if w.shape != (head_in, width) or bias.shape != (width,):
            raise ShapeError(f"head layer {i}: weights {w.shape}, bias {bias.shape}, expected {(head_in, width)}")
        head_in = width


def load_config(path) -> ModelConfig:
    with open(path) as fh:
        return ModelConfig.from_dict(json.load(fh))


def save_config(cfg: ModelConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_json(cfg.to_dict()))
        fh.write("\n")
