"""Corpus preprocessing, vocabulary, embeddings, label projection and
synthetic-corpus generation.

On-disk formats:
  corpus     UTF-8 CSV, header ``id,text,labels``; the label cell holds
             ICD codes joined by ';'
  mapping    UTF-8 CSV ``icd_code,ccs_code`` (header optional)
  embeddings word-vector text: header line ``count dim`` then one
             ``token v1 ... v_dim`` line per word
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    DataFormatError,
    InputError,
    MappingConflictError,
    MappingGapError,
)

PAD_ID = 0
UNK_ID = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
MAX_DOC_LEN = 4000
MIN_DOC_FREQ = 3

_ALPHA = re.compile(r"^[a-z]+$")


def tokenize(raw):
    """Lowercase, split on whitespace, keep purely alphabetic tokens."""
    return [t for t in raw.lower().split() if _ALPHA.match(t)]


@dataclass
class Vocabulary:
    """Token/id bijection with ids 0 (pad) and 1 (unk) reserved."""

    token_to_id: dict
    id_to_token: list
    doc_freq: dict

    def __len__(self):
        return len(self.id_to_token)

    def lookup(self, token):
        return self.token_to_id.get(token, UNK_ID)


def build_vocab(texts):
    """Vocabulary over raw document texts.

    A token gets its own id iff it appears in at least MIN_DOC_FREQ
    distinct documents; ids are assigned by descending document frequency,
    ties broken lexicographically.
    """
    texts = list(texts)
    if not texts:
        raise InputError("build_vocab: empty corpus")
    df = {}
    for text in texts:
        for tok in set(tokenize(text)):
            df[tok] = df.get(tok, 0) + 1
    kept = sorted((t for t, c in df.items() if c >= MIN_DOC_FREQ),
                  key=lambda t: (-df[t], t))
    id_to_token = [PAD_TOKEN, UNK_TOKEN] + kept
    token_to_id = {t: i for i, t in enumerate(id_to_token) if i >= 2}
    return Vocabulary(token_to_id=token_to_id, id_to_token=id_to_token, doc_freq=df)


def preprocess_text(raw, vocab, max_len=MAX_DOC_LEN):
    """Raw text to a token-id sequence, truncated to ``max_len`` ids."""
    ids = [vocab.lookup(t) for t in tokenize(raw)]
    return np.asarray(ids[:max_len], dtype=np.int64)


@dataclass
class LabelSpace:
    """Ordered ICD and CCS code lists plus the many-to-one index map."""

    icd_codes: list
    ccs_codes: list
    icd_to_ccs: dict  # icd index -> ccs index, total

    @property
    def n_icd(self):
        return len(self.icd_codes)

    @property
    def n_ccs(self):
        return len(self.ccs_codes)

    def icd_index(self, code):
        return self.icd_codes.index(code)


def load_code_mapping(path):
    """ICD-to-CCS code map from a two-column CSV (header optional)."""
    mapping = {}
    with open(path, encoding="utf-8") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or (lineno == 1 and [c.strip().lower() for c in row] == ["icd_code", "ccs_code"]):
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected two columns, got {len(row)}")
            icd, ccs = row[0].strip(), row[1].strip()
            if icd in mapping and mapping[icd] != ccs:
                raise MappingConflictError(
                    f"{path}:{lineno}: ICD code {icd} mapped to both {mapping[icd]} and {ccs}")
            mapping[icd] = ccs
    return mapping


def build_label_space(icd_codes, mapping):
    """Dense, ordered label space over the given ICD codes.

    Every ICD code must be covered by ``mapping``; the CCS list is the
    sorted image of the ICD set.
    """
    icd_codes = sorted(set(icd_codes))
    if not icd_codes:
        raise InputError("build_label_space: no ICD codes")
    missing = [c for c in icd_codes if c not in mapping]
    if missing:
        raise MappingGapError(f"ICD codes without a CCS mapping: {missing[:5]}")
    ccs_codes = sorted({mapping[c] for c in icd_codes})
    ccs_index = {c: j for j, c in enumerate(ccs_codes)}
    icd_to_ccs = {i: ccs_index[mapping[c]] for i, c in enumerate(icd_codes)}
    return LabelSpace(icd_codes=icd_codes, ccs_codes=ccs_codes, icd_to_ccs=icd_to_ccs)


def derive_ccs_labels(icd_labels, space):
    """Image of a document's ICD index set under the ICD-to-CCS map."""
    out = set()
    for i in icd_labels:
        if i not in space.icd_to_ccs:
            raise MappingGapError(f"ICD index {i} has no CCS image")
        out.add(space.icd_to_ccs[i])
    return out


@dataclass
class Document:
    """One preprocessed document: token ids plus both label index sets."""

    id: str
    tokens: np.ndarray
    icd_labels: set
    ccs_labels: set

    @property
    def length(self):
        return len(self.tokens)


# -- corpus files ---------------------------------------------------------


@dataclass
class CorpusRow:
    id: str
    text: str
    labels: tuple  # ICD code strings


def read_corpus(path):
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["id", "text", "labels"]:
            raise DataFormatError(f"{path}: expected header 'id,text,labels', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise DataFormatError(f"{path}:{lineno}: expected three columns")
            labels = tuple(c for c in row[2].split(";") if c)
            rows.append(CorpusRow(id=row[0], text=row[1], labels=labels))
    return rows


def write_corpus(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["id", "text", "labels"])
        for r in rows:
            writer.writerow([r.id, r.text, ";".join(r.labels)])


def write_mapping(path, mapping):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["icd_code", "ccs_code"])
        for icd in sorted(mapping):
            writer.writerow([icd, mapping[icd]])


def prepare_documents(rows, vocab, space):
    """Tokenize corpus rows against a vocabulary and project their labels."""
    icd_index = {c: i for i, c in enumerate(space.icd_codes)}
    docs = []
    for r in rows:
        unknown = [c for c in r.labels if c not in icd_index]
        if unknown:
            raise MappingGapError(f"document {r.id}: codes outside the label space: {unknown}")
        icd = {icd_index[c] for c in r.labels}
        docs.append(Document(id=r.id, tokens=preprocess_text(r.text, vocab),
                             icd_labels=icd, ccs_labels=derive_ccs_labels(icd, space)))
    return docs


# -- embeddings -----------------------------------------------------------


def load_embeddings(path, vocab, d_e, seed=0):
    """Embedding matrix |V| x d_e from a word-vector text file.

    Matched tokens copy their file vectors; the pad row is zero; unk and
    unmatched rows are drawn uniform in +-0.25/sqrt(d_e) from a seeded
    generator.
    """
    vectors = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise DataFormatError(f"{path}:1: expected header 'count dim'")
        _, dim = int(header[0]), int(header[1])
        if dim != d_e:
            raise DataFormatError(f"{path}:1: file dimension {dim} != configured {d_e}")
        for lineno, line in enumerate(f, start=2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != d_e + 1:
                raise DataFormatError(f"{path}:{lineno}: expected {d_e + 1} fields, got {len(parts)}")
            vectors[parts[0]] = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
    rng = np.random.default_rng(seed)
    bound = 0.25 / np.sqrt(d_e)
    mat = np.zeros((len(vocab), d_e), dtype=np.float32)
    for i, tok in enumerate(vocab.id_to_token):
        if i == PAD_ID:
            continue
        if tok in vectors:
            mat[i] = vectors[tok]
        else:
            mat[i] = rng.uniform(-bound, bound, size=d_e).astype(np.float32)
    return mat


def write_embeddings_file(path, tokens, dim, seed=0):
    """Random word-vector file covering ``tokens`` (stand-in for word2vec)."""
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"{len(tokens)} {dim}\n")
        for tok in tokens:
            vec = rng.uniform(-0.5, 0.5, size=dim)
            f.write(tok + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")


# -- synthetic corpus -----------------------------------------------------


@dataclass
class SynthConfig:
    """Knobs for the keyword-signal synthetic corpus generator."""

    n_docs: int = 2000
    n_icd: int = 12
    n_ccs: int = 5
    vocab_size: int = 200          # background words
    len_range: tuple = (20, 50)
    zipf_exponent: float = 1.0
    keywords_per_code: int = 3
    signal_prob: float = 0.35      # slot emits a keyword of one of the doc's codes
    noise_prob: float = 0.02       # slot emits a keyword of a random code
    codes_per_doc: tuple = (1, 3)
    embedding_dim: int = 50


@dataclass
class SyntheticCorpus:
    rows: list
    space: LabelSpace
    mapping: dict                  # icd code -> ccs code
    keywords: dict                 # icd code -> tuple of signature tokens
    tokens: list                   # every token the generator can emit
    config: SynthConfig = field(repr=False, default=None)


_CONSONANTS = list("bcdfghjklmnprstvz")
_VOWELS = list("aeiou")


def _make_words(rng, count):
    """Distinct pronounceable lowercase words."""
    words = []
    seen = set()
    while len(words) < count:
        n_syll = int(rng.integers(2, 5))
        w = "".join(rng.choice(_CONSONANTS) + rng.choice(_VOWELS) for _ in range(n_syll))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def zipf_weights(n, exponent):
    w = np.arange(1, n + 1, dtype=np.float64) ** -exponent
    return w / w.sum()


def generate_synthetic_corpus(cfg, seed):
    """Keyword-signal corpus over a Zipf-distributed ICD code set.

    Each ICD code owns a signature keyword set; documents sample codes by
    frequency and emit a mix of their codes' keywords and background
    words.  The ICD-to-CCS map is a random surjective grouping.  Output is
    a deterministic function of (cfg, seed).
    """
    if cfg.n_ccs >= cfg.n_icd:
        raise ConfigError(f"synthetic corpus needs n_ccs < n_icd, got {cfg.n_ccs} >= {cfg.n_icd}")
    lo, hi = cfg.len_range
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad len_range {cfg.len_range}")
    kmin, kmax = cfg.codes_per_doc
    if kmin < 1 or kmax < kmin or kmax > cfg.n_icd:
        raise ConfigError(f"bad codes_per_doc {cfg.codes_per_doc}")
    if cfg.signal_prob + cfg.noise_prob > 1.0:
        raise ConfigError("signal_prob + noise_prob must be <= 1")

    rng = np.random.default_rng(seed)
    words = _make_words(rng, cfg.vocab_size + cfg.n_icd * cfg.keywords_per_code)
    background = words[:cfg.vocab_size]
    icd_codes = [f"{100 + i}.0" for i in range(cfg.n_icd)]
    ccs_codes = [str(j + 1) for j in range(cfg.n_ccs)]
    keywords = {}
    for i, code in enumerate(icd_codes):
        start = cfg.vocab_size + i * cfg.keywords_per_code
        keywords[code] = tuple(words[start:start + cfg.keywords_per_code])

    # surjective many-to-one grouping: one ICD pinned to each CCS, rest random
    perm = rng.permutation(cfg.n_icd)
    mapping = {}
    for j in range(cfg.n_ccs):
        mapping[icd_codes[perm[j]]] = ccs_codes[j]
    for i in perm[cfg.n_ccs:]:
        mapping[icd_codes[i]] = ccs_codes[int(rng.integers(cfg.n_ccs))]

    weights = zipf_weights(cfg.n_icd, cfg.zipf_exponent)
    rows = []
    for d in range(cfg.n_docs):
        k = int(rng.integers(kmin, kmax + 1))
        code_idx = rng.choice(cfg.n_icd, size=k, replace=False, p=weights)
        doc_codes = [icd_codes[i] for i in sorted(code_idx)]
        own_keywords = [kw for c in doc_codes for kw in keywords[c]]
        length = int(rng.integers(lo, hi + 1))
        draws = rng.random(length)
        toks = []
        for u in draws:
            if u < cfg.signal_prob:
                toks.append(own_keywords[int(rng.integers(len(own_keywords)))])
            elif u < cfg.signal_prob + cfg.noise_prob:
                any_code = icd_codes[int(rng.integers(cfg.n_icd))]
                kws = keywords[any_code]
                toks.append(kws[int(rng.integers(len(kws)))])
            else:
                toks.append(background[int(rng.integers(cfg.vocab_size))])
        rows.append(CorpusRow(id=f"doc{d:05d}", text=" ".join(toks), labels=tuple(doc_codes)))

    space = build_label_space(icd_codes, mapping)
    return SyntheticCorpus(rows=rows, space=space, mapping=mapping, keywords=keywords,
                           tokens=list(words), config=cfg)


# -- dataset split --------------------------------------------------------


def split_dataset(items, fractions, seed):
    """Disjoint, exhaustive, seeded-shuffle split by fractions."""
    fractions = tuple(float(f) for f in fractions)
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions sum to {sum(fractions)}, expected 1")
    items = list(items)
    order = np.random.default_rng(seed).permutation(len(items))
    bounds = [0]
    cum = 0.0
    for f in fractions:
        cum += f
        bounds.append(int(round(cum * len(items))))
    bounds[-1] = len(items)
    parts = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        parts.append([items[i] for i in order[a:b]])
    return tuple(parts)
