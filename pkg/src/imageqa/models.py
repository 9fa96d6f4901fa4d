"""The four model families and their shared plumbing.

Every model encodes the question into one vector per example, optionally
merges it with an embedded image-feature vector, and finishes with
dropout -> dense -> softmax over answer classes.

  blind-bow   embed tokens, average the unpadded time steps
  blind-rnn   run a GRU or LSTM over the unpadded tokens, keep the final state
  vl-bow      blind-bow language branch merged with the visual branch
  vl-rnn      blind-rnn language branch merged with the visual branch

Pad steps (index 0) contribute nothing: the BOW average masks them out and
the recurrent encoders carry their state straight through them.  The raw
visual features are constants; only their optional dense re-embedding is
trained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Tape, Tensor
from .errors import (
    ConfigurationError,
    ContractError,
    DimensionError,
    EmptySequenceError,
    FormatError,
)

PAD_INDEX = 0  # questions are front-padded with the reserved index 0

MERGE_MODES = ("concat", "mul", "sum", "ave")
CELLS = ("gru", "lstm")
BOW_POOLINGS = ("average", "sum")
MODEL_KINDS = ("blind-bow", "blind-rnn", "vl-bow", "vl-rnn")


@dataclass
class ModelConfig:
    """Architecture hyperparameters.

    ``visual_embedding_dim`` > 0 inserts a trained dense layer on top of the
    raw features; 0 feeds them to the merge unchanged.  ``multimodal_merge_mode``
    'ave' is the elementwise mean of the two branches.
    """

    input_dim: int
    output_dim: int
    textual_embedding_dim: int = 500
    hidden_state_dim: int = 500
    visual_dim: int = 0
    visual_embedding_dim: int = 0
    multimodal_merge_mode: str = "concat"
    cell: str = "gru"
    bow_pooling: str = "average"
    dropout_rate: float = 0.5
    seed: int = 0


def _language_dim(kind: str, config: ModelConfig) -> int:
    return (
        config.textual_embedding_dim
        if kind.endswith("bow")
        else config.hidden_state_dim
    )


def _visual_out_dim(config: ModelConfig) -> int:
    return config.visual_embedding_dim if config.visual_embedding_dim > 0 else config.visual_dim


def _validate_config(kind: str, config: ModelConfig) -> int:
    """Check a config against a model kind; returns the merged width."""
    if kind not in MODEL_KINDS:
        raise ConfigurationError(f"unknown model kind '{kind}'")
    if config.input_dim < 2:
        raise ConfigurationError("input_dim must cover at least <pad> and <unk>")
    if config.output_dim < 1:
        raise ConfigurationError("output_dim must be >= 1")
    if config.textual_embedding_dim < 1:
        raise ConfigurationError("textual_embedding_dim must be >= 1")
    if kind.endswith("rnn") and config.hidden_state_dim < 1:
        raise ConfigurationError("hidden_state_dim must be >= 1")
    if kind.endswith("rnn") and config.cell not in CELLS:
        raise ConfigurationError(f"cell must be one of {CELLS}, got '{config.cell}'")
    if config.bow_pooling not in BOW_POOLINGS:
        raise ConfigurationError(
            f"bow_pooling must be one of {BOW_POOLINGS}, got '{config.bow_pooling}'"
        )
    if not 0.0 <= config.dropout_rate < 1.0:
        raise ConfigurationError(
            f"dropout_rate must be in [0, 1), got {config.dropout_rate}"
        )
    lang = _language_dim(kind, config)
    if not kind.startswith("vl"):
        return lang
    if config.visual_dim < 1:
        raise ConfigurationError("vision models need visual_dim >= 1")
    if config.visual_embedding_dim < 0:
        raise ConfigurationError("visual_embedding_dim must be >= 0")
    if config.multimodal_merge_mode not in MERGE_MODES:
        raise ConfigurationError(
            f"merge mode must be one of {MERGE_MODES}, got "
            f"'{config.multimodal_merge_mode}'"
        )
    visual = _visual_out_dim(config)
    if config.multimodal_merge_mode == "concat":
        return lang + visual
    if lang != visual:
        raise ConfigurationError(
            f"merge mode '{config.multimodal_merge_mode}' needs equal branch "
            f"widths, got language {lang} and visual {visual}"
        )
    return lang


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def _init_cell(rng: np.random.Generator, cell: str, d_in: int, d_h: int,
               params: dict[str, Tensor]) -> None:
    gates = ("z", "r", "h") if cell == "gru" else ("i", "f", "o", "g")
    for gate in gates:
        params[f"rnn.w_{gate}"] = Tensor(_glorot(rng, d_in, d_h, (d_in, d_h)), True)
        params[f"rnn.u_{gate}"] = Tensor(_glorot(rng, d_h, d_h, (d_h, d_h)), True)
        # forget gate starts open so early training does not erase the cell
        bias = np.ones(d_h) if gate == "f" else np.zeros(d_h)
        params[f"rnn.b_{gate}"] = Tensor(bias, True)


def gru_step(tape: Tape, h: Tensor, x: Tensor, params: Mapping[str, Tensor]) -> Tensor:
    """z = sig(Wz x + Uz h + bz); r = sig(Wr x + Ur h + br);
    cand = tanh(Wh x + Uh (r*h) + bh); h' = (1-z)*h + z*cand."""

    def gate(name, pre_h):
        lin = tape.add(
            tape.add(
                tape.vecmat(x, params[f"rnn.w_{name}"]),
                tape.vecmat(pre_h, params[f"rnn.u_{name}"]),
            ),
            params[f"rnn.b_{name}"],
        )
        return lin

    z = tape.sigmoid(gate("z", h))
    r = tape.sigmoid(gate("r", h))
    cand = tape.tanh(gate("h", tape.mul(r, h)))
    # (1-z)*h + z*cand, written as h + z*(cand-h)
    return tape.add(h, tape.mul(z, tape.sub(cand, h)))


def lstm_step(
    tape: Tape, h: Tensor, c: Tensor, x: Tensor, params: Mapping[str, Tensor]
) -> tuple[Tensor, Tensor]:
    """Standard gates i, f, o and candidate g; c' = f*c + i*g, h' = o*tanh(c')."""

    def gate(name, activate):
        lin = tape.add(
            tape.add(
                tape.vecmat(x, params[f"rnn.w_{name}"]),
                tape.vecmat(h, params[f"rnn.u_{name}"]),
            ),
            params[f"rnn.b_{name}"],
        )
        return activate(lin)

    i = gate("i", tape.sigmoid)
    f = gate("f", tape.sigmoid)
    o = gate("o", tape.sigmoid)
    g = gate("g", tape.tanh)
    c_new = tape.add(tape.mul(f, c), tape.mul(i, g))
    h_new = tape.mul(o, tape.tanh(c_new))
    return h_new, c_new


@dataclass
class Model:
    kind: str
    config: ModelConfig
    params: dict[str, Tensor]
    merged_dim: int = field(default=0)

    @property
    def is_vision(self) -> bool:
        return self.kind.startswith("vl")

    def language_vectors(self, tape: Tape, questions) -> Tensor:
        """Encode a padded [N x T] index batch into one vector per example."""
        q = np.asarray(questions, dtype=np.int64)
        if q.ndim != 2:
            raise DimensionError(f"questions must be [N x T], got {q.shape}")
        if q.shape[0] == 0:
            raise ContractError("cannot encode an empty batch")
        embedding = self.params["embedding"]
        vectors = []
        for row in q:
            idx = [int(i) for i in row]
            if self.kind.endswith("bow"):
                looked = tape.embedding_lookup(embedding, idx)
                mask = [0 if i == PAD_INDEX else 1 for i in idx]
                v = tape.masked_temporal_average(looked, mask)
                if self.config.bow_pooling == "sum":
                    v = tape.scale(v, float(sum(mask)))
            else:
                real = [i for i in idx if i != PAD_INDEX]
                if not real:
                    raise EmptySequenceError("question has no unpadded tokens")
                looked = tape.embedding_lookup(embedding, real)
                h = Tensor(np.zeros(self.config.hidden_state_dim))
                if self.config.cell == "lstm":
                    c = Tensor(np.zeros(self.config.hidden_state_dim))
                    for t in range(len(real)):
                        h, c = lstm_step(tape, h, c, tape.take_row(looked, t), self.params)
                else:
                    for t in range(len(real)):
                        h = gru_step(tape, h, tape.take_row(looked, t), self.params)
                v = h
            vectors.append(v)
        return tape.stack_rows(vectors)

    def forward(
        self,
        tape: Tape,
        questions,
        visual=None,
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        """Score answer classes; rows of the result sum to 1."""
        q = np.asarray(questions, dtype=np.int64)
        if self.is_vision:
            if visual is None:
                raise ContractError(f"{self.kind} needs a visual feature batch")
            vis = np.asarray(visual, dtype=np.float64)
            if vis.ndim != 2 or vis.shape != (q.shape[0], self.config.visual_dim):
                raise DimensionError(
                    f"visual batch must be [{q.shape[0]} x {self.config.visual_dim}], "
                    f"got {vis.shape}"
                )
        elif visual is not None:
            raise ContractError(f"{self.kind} does not take visual features")

        lang = self.language_vectors(tape, q)
        if self.is_vision:
            branch = Tensor(vis)  # constant: no gradient reaches the raw features
            if self.config.visual_embedding_dim > 0:
                branch = tape.bias_add(
                    tape.matmul(branch, self.params["visual.weight"]),
                    self.params["visual.bias"],
                )
            mode = self.config.multimodal_merge_mode
            if mode == "concat":
                merged = tape.concat(lang, branch)
            elif mode == "mul":
                merged = tape.mul(lang, branch)
            elif mode == "sum":
                merged = tape.add(lang, branch)
            else:  # ave
                merged = tape.scale(tape.add(lang, branch), 0.5)
        else:
            merged = lang

        dropped = tape.dropout(merged, self.config.dropout_rate, training, rng)
        logits = tape.bias_add(
            tape.matmul(dropped, self.params["classifier.weight"]),
            self.params["classifier.bias"],
        )
        return tape.softmax(logits)


def _finish(kind: str, config: ModelConfig, rng: np.random.Generator,
            params: dict[str, Tensor], merged_dim: int) -> Model:
    params["classifier.weight"] = Tensor(
        _glorot(rng, merged_dim, config.output_dim, (merged_dim, config.output_dim)),
        True,
    )
    params["classifier.bias"] = Tensor(np.zeros(config.output_dim), True)
    return Model(kind=kind, config=config, params=params, merged_dim=merged_dim)


def _start(kind: str, config: ModelConfig, rng) -> tuple[np.random.Generator, dict, int]:
    merged = _validate_config(kind, config)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    params: dict[str, Tensor] = {
        "embedding": Tensor(
            _glorot(
                rng,
                config.input_dim,
                config.textual_embedding_dim,
                (config.input_dim, config.textual_embedding_dim),
            ),
            True,
        )
    }
    return rng, params, merged


def _add_visual(config: ModelConfig, rng, params) -> None:
    if config.visual_embedding_dim > 0:
        params["visual.weight"] = Tensor(
            _glorot(
                rng,
                config.visual_dim,
                config.visual_embedding_dim,
                (config.visual_dim, config.visual_embedding_dim),
            ),
            True,
        )
        params["visual.bias"] = Tensor(np.zeros(config.visual_embedding_dim), True)


def build_blind_bow(config: ModelConfig, rng=None) -> Model:
    """Embedding -> masked temporal average -> dropout -> dense -> softmax."""
    rng, params, merged = _start("blind-bow", config, rng)
    return _finish("blind-bow", config, rng, params, merged)


def build_blind_rnn(config: ModelConfig, rng=None) -> Model:
    """Embedding -> GRU/LSTM over unpadded steps -> dropout -> dense -> softmax."""
    rng, params, merged = _start("blind-rnn", config, rng)
    _init_cell(rng, config.cell, config.textual_embedding_dim,
               config.hidden_state_dim, params)
    return _finish("blind-rnn", config, rng, params, merged)


def build_vision_bow(config: ModelConfig, rng=None) -> Model:
    """blind-bow language branch merged with the (optionally re-embedded)
    visual branch before the classifier."""
    rng, params, merged = _start("vl-bow", config, rng)
    _add_visual(config, rng, params)
    return _finish("vl-bow", config, rng, params, merged)


def build_vision_rnn(config: ModelConfig, rng=None) -> Model:
    """blind-rnn language branch merged with the visual branch."""
    rng, params, merged = _start("vl-rnn", config, rng)
    _init_cell(rng, config.cell, config.textual_embedding_dim,
               config.hidden_state_dim, params)
    _add_visual(config, rng, params)
    return _finish("vl-rnn", config, rng, params, merged)


_BUILDERS = {
    "blind-bow": build_blind_bow,
    "blind-rnn": build_blind_rnn,
    "vl-bow": build_vision_bow,
    "vl-rnn": build_vision_rnn,
}


def build_model(kind: str, config: ModelConfig, rng=None) -> Model:
    if kind not in _BUILDERS:
        raise ConfigurationError(f"unknown model kind '{kind}'")
    return _BUILDERS[kind](config, rng)


def decode_predictions(
    model: Model, questions, visual=None, *, index2word: Mapping[int, str]
) -> list[str]:
    """Most likely answer word per example; score ties go to the lowest index."""
    q = np.asarray(questions, dtype=np.int64)
    if len(q) == 0:
        return []
    tape = Tape()
    scores = model.forward(tape, q, visual, training=False)
    best = np.argmax(scores.data, axis=-1)  # np.argmax already takes the first max
    return [index2word[int(i)] for i in best]


# ----------------------------------------------------------------------
# checkpoints: pairs of lines, a "name dims..." header then the flat values


def format_checkpoint(params: Mapping[str, Tensor]) -> str:
    lines = []
    for name, tensor in params.items():
        dims = " ".join(str(d) for d in tensor.shape)
        lines.append(f"{name} {dims}".rstrip())
        lines.append(" ".join(repr(float(v)) for v in tensor.data.reshape(-1)))
    return "\n".join(lines) + "\n"


def parse_checkpoint(text: str) -> dict[str, np.ndarray]:
    lines = text.split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) % 2 != 0:
        raise FormatError("checkpoint must alternate header and value lines")
    arrays: dict[str, np.ndarray] = {}
    for i in range(0, len(lines), 2):
        parts = lines[i].split(" ")
        name = parts[0]
        if not name:
            raise FormatError(f"missing tensor name on checkpoint line {i + 1}")
        try:
            dims = tuple(int(d) for d in parts[1:])
            values = np.asarray([float(v) for v in lines[i + 1].split(" ") if v])
        except ValueError:
            raise FormatError(f"unparseable checkpoint entry at line {i + 1}")
        if values.size != int(np.prod(dims)):
            raise FormatError(
                f"tensor '{name}' declares shape {dims} but has {values.size} values"
            )
        if name in arrays:
            raise FormatError(f"duplicate tensor '{name}' at line {i + 1}")
        arrays[name] = values.reshape(dims)
    return arrays


def load_checkpoint(model: Model, arrays: Mapping[str, np.ndarray]) -> None:
    """Copy stored arrays into a freshly built model, name by name."""
    expected = set(model.params)
    got = set(arrays)
    if expected != got:
        raise ContractError(
            f"checkpoint tensors {sorted(got)} do not match model tensors "
            f"{sorted(expected)}"
        )
    for name, tensor in model.params.items():
        if arrays[name].shape != tensor.data.shape:
            raise ContractError(
                f"tensor '{name}' has shape {arrays[name].shape}, "
                f"model expects {tensor.data.shape}"
            )
        tensor.data[...] = arrays[name]
