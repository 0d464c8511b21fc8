"""Text preprocessing: tokenization, suffix stripping, n-gram vocabularies,
and sparse document-term matrices with count / binary / TF-IDF weighting.

The preprocessing pipeline is lowercase -> strip non-alphanumerics ->
drop stopwords -> suffix-strip to a fixpoint -> drop stopwords again.
The second stopword pass keeps the pipeline idempotent on its own output
(a stripped form can itself be a stopword, e.g. "fires" -> "fire").
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .linalg import SparseMatrix

__all__ = [
    "Document",
    "Vocabulary",
    "DocTermMatrix",
    "CorpusStats",
    "default_stopwords",
    "load_stopwords",
    "preprocess",
    "stem",
    "simple_tokens",
    "extract_ngrams",
    "build_vocabulary",
    "build_matrix",
    "binarize",
    "tfidf",
    "compute_idf",
    "word_count_stats",
    "read_corpus",
    "write_corpus",
    "read_dtm",
    "write_dtm",
    "read_labels",
    "write_labels",
]


@dataclass(frozen=True)
class Document:
    """One labeled text record. label is 1 / 0 / None (unlabeled)."""

    id: str
    text: str
    label: int | None = None


_TOKEN_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

# Irregular forms resolved before the suffix rules. Replacements must be
# fixpoints of the rule set below.
_STEM_EXCEPTIONS = {
    "children": "child",
    "men": "man",
    "women": "woman",
    "feet": "foot",
    "teeth": "tooth",
    "mice": "mouse",
    "geese": "goose",
    "went": "go",
    "ran": "run",
    "spoke": "speak",
}

_VOWELS = set("aeiou")


def _strip_once(token):
    """Apply the first matching suffix rule; None if no rule fires.

    Rules (first match wins):
      -sses -> -ss              classes -> class
      -ies  -> -y   (len >= 5)  flies -> fly
      -oes/-xes/-ches/-shes/-zes -> drop "es"   boxes -> box
      -es   -> -e   (len >= 5)  houses -> house
      -s    -> drop (len >= 4, not -ss/-us/-is) boys -> boy
      -iness -> -y              happiness -> happy
      -ness -> drop (len >= 7)  darkness -> dark
      -ied  -> -y   (len >= 5)  tried -> try
      -ying -> -y   (len >= 6)  flying -> fly
      -ing  -> drop (stem >= 3) running -> run
      -ed   -> drop (stem >= 3) stopped -> stop
      -ly   -> drop (stem >= 3) quickly -> quick
      -ment -> drop (stem >= 4) treatment -> treat
    After -ing/-ed removal a trailing doubled consonant (other than
    l/s/z) is undoubled.
    """
    t = token
    n = len(t)
    if t.endswith("sses") and n >= 5:
        return t[:-2]
    if t.endswith("ies") and n >= 5:
        return t[:-3] + "y"
    for suf in ("oes", "xes", "ches", "shes", "zes"):
        if t.endswith(suf) and n - 2 >= 2:
            return t[:-2]
    if t.endswith("es") and n >= 5:
        return t[:-1]
    if (
        t.endswith("s")
        and n >= 4
        and not t.endswith(("ss", "us", "is"))
    ):
        return t[:-1]
    if t.endswith("iness"):
        return t[:-5] + "y"
    if t.endswith("ness") and n >= 7:
        return t[:-4]
    if t.endswith("ied") and n >= 5:
        return t[:-3] + "y"
    if t.endswith("ying") and n >= 6:
        return t[:-4] + "y"
    for suf in ("ing", "ed"):
        if t.endswith(suf) and n - len(suf) >= 3:
            stem = t[: -len(suf)]
            if (
                len(stem) >= 2
                and stem[-1] == stem[-2]
                and stem[-1] not in _VOWELS
                and stem[-1] not in "lsz"
            ):
                stem = stem[:-1]
            return stem
    if t.endswith("ly") and n - 2 >= 3:
        return t[:-2]
    if t.endswith("ment") and n - 4 >= 4:
        return t[:-4]
    return None


def stem(token):
    """Suffix-strip a lowercase token to a fixpoint of the rule set.

    The exceptions table is consulted on every pass so that stripping
    cannot strand a form whose exception-mapped stem differs (keeps
    stemming, and hence preprocess, idempotent).
    """
    out = token
    while True:
        if out in _STEM_EXCEPTIONS:
            out = _STEM_EXCEPTIONS[out]
            continue
        nxt = _strip_once(out)
        if nxt is None:
            return out
        out = nxt


def default_stopwords():
    """The stopword list shipped with the package, as a frozenset."""
    text = (
        resources.files("survbench").joinpath("data/stopwords.txt")
        .read_text(encoding="utf-8")
    )
    return frozenset(w for w in text.split() if w)


def load_stopwords(path):
    """Read a one-term-per-line UTF-8 stopword file."""
    with open(path, encoding="utf-8") as f:
        return frozenset(w.strip() for w in f if w.strip())


_DEFAULT_STOPWORDS = None


def _stopword_set(stopwords):
    global _DEFAULT_STOPWORDS
    if stopwords is not None:
        return stopwords
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = default_stopwords()
    return _DEFAULT_STOPWORDS


def simple_tokens(text):
    """Lowercase and split on non-alphanumerics; no stopwords, no stemming."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def preprocess(text, stopwords=None):
    """Turn raw text into a list of normalized tokens.

    Tokens are lowercase, alphanumeric-only, stopword-free, and
    suffix-stripped; order is preserved. Idempotent: running the output
    (space-joined) through again returns the same tokens.
    """
    sw = _stopword_set(stopwords)
    out = []
    for tok in simple_tokens(text):
        if tok in sw:
            continue
        stemmed = stem(tok)
        if stemmed and stemmed not in sw:
            out.append(stemmed)
    return out


def extract_ngrams(tokens, n_max):
    """Counts of unigrams and, for n_max=2, adjacent bigrams ("w1 w2")."""
    if n_max not in (1, 2):
        raise ValueError(f"n_max must be 1 or 2, got {n_max}")
    counts = Counter(tokens)
    if n_max == 2:
        counts.update(
            f"{a} {b}" for a, b in zip(tokens, tokens[1:])
        )
    return dict(counts)


@dataclass
class Vocabulary:
    """Term -> dense column index, with per-term document frequency.

    Indices are assigned in lexicographic term order; n_docs records the
    size of the corpus the vocabulary (and hence any IDF) came from.
    """

    index: dict
    doc_freq: dict
    n_max: int
    n_docs: int

    @property
    def n_features(self):
        return len(self.index)

    def terms(self):
        """Terms in index order."""
        out = [None] * len(self.index)
        for term, j in self.index.items():
            out[j] = term
        return out


class DocTermMatrix(SparseMatrix):
    """Sparse documents x terms matrix; weighting in {count,binary,tfidf}."""

    def __init__(self, n_docs, n_features, rows, cols, values, weighting):
        if weighting not in ("count", "binary", "tfidf"):
            raise ValueError(f"unknown weighting {weighting!r}")
        super().__init__(n_docs, n_features, rows, cols, values)
        if self.data.size and self.data.min() <= 0:
            raise ValueError("stored values must be positive")
        if weighting == "binary" and self.data.size and not np.all(
            self.data == 1.0
        ):
            raise ValueError("binary weighting requires all values == 1")
        self.weighting = weighting

    @property
    def n_docs(self):
        return self.shape[0]

    @property
    def n_features(self):
        return self.shape[1]


def _tokenize_corpus(corpus, stopwords):
    return [preprocess(doc.text, stopwords) for doc in corpus]


def build_vocabulary(corpus, n_max=2, min_df=1, stopwords=None,
                     token_lists=None):
    """Collect every n-gram with document frequency >= min_df.

    token_lists, when given, must be the preprocessed tokens of corpus
    in order (lets callers reuse a tokenization cache).
    """
    if not corpus and not token_lists:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    if token_lists is None:
        token_lists = _tokenize_corpus(corpus, stopwords)
    df = Counter()
    for tokens in token_lists:
        df.update(extract_ngrams(tokens, n_max).keys())
    kept = sorted(t for t, c in df.items() if c >= min_df)
    index = {t: j for j, t in enumerate(kept)}
    return Vocabulary(
        index=index,
        doc_freq={t: df[t] for t in kept},
        n_max=n_max,
        n_docs=len(token_lists),
    )


def build_matrix(corpus, vocab, stopwords=None, token_lists=None):
    """Count DocTermMatrix over vocab; out-of-vocabulary terms dropped."""
    if token_lists is None:
        token_lists = _tokenize_corpus(corpus, stopwords)
    rows, cols, vals = [], [], []
    for i, tokens in enumerate(token_lists):
        grams = extract_ngrams(tokens, vocab.n_max)
        for term, count in grams.items():
            j = vocab.index.get(term)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(float(count))
    return DocTermMatrix(
        len(token_lists), vocab.n_features, rows, cols, vals, "count"
    )


def binarize(M):
    """Clip every stored count to 1; sparsity pattern unchanged."""
    rows, cols, vals = M.to_triplets()
    return DocTermMatrix(
        M.n_docs, M.n_features, rows, cols, np.ones_like(vals), "binary"
    )


def compute_idf(M):
    """Smoothed inverse document frequency from a matrix's own pattern:
    idf(j) = ln((1 + n_docs) / (1 + df_j)) + 1."""
    df = np.zeros(M.n_features)
    np.add.at(df, M.indices, 1.0)
    return np.log((1.0 + M.n_docs) / (1.0 + df)) + 1.0


def tfidf(M, idf=None):
    """Reweight counts by IDF and scale each row to unit Euclidean norm.

    idf defaults to compute_idf(M); pass a training-set IDF when
    transforming held-out documents. Zero rows stay zero.
    """
    if M.weighting != "count":
        raise ValueError("tfidf expects a count-weighted matrix")
    if idf is None:
        idf = compute_idf(M)
    idf = np.asarray(idf, dtype=np.float64)
    if idf.shape != (M.n_features,):
        raise ValueError("idf length must equal n_features")
    rows, cols, vals = M.to_triplets()
    weighted = vals * idf[cols]
    sq = np.zeros(M.n_docs)
    np.add.at(sq, rows, weighted**2)
    norms = np.sqrt(sq)
    norms[norms == 0] = 1.0
    return DocTermMatrix(
        M.n_docs, M.n_features, rows, cols, weighted / norms[rows], "tfidf"
    )


def select_features(M, feature_ids):
    """Restrict a matrix to the given columns, renumbered by position.

    Stored values are carried over unchanged (a sliced TF-IDF matrix is
    not re-normalized).
    """
    feature_ids = np.asarray(feature_ids, dtype=np.int64)
    remap = -np.ones(M.n_features, dtype=np.int64)
    remap[feature_ids] = np.arange(feature_ids.size)
    rows, cols, vals = M.to_triplets()
    keep = remap[cols] >= 0
    return DocTermMatrix(
        M.n_docs, feature_ids.size, rows[keep], remap[cols[keep]],
        vals[keep], M.weighting,
    )


@dataclass
class CorpusStats:
    """Per-document total/unique word counts with five-number summaries."""

    totals: np.ndarray
    uniques: np.ndarray
    total_summary: tuple
    unique_summary: tuple


def _five_number(values):
    # type-7 (linear interpolation) quartiles, numpy's default
    q = np.percentile(values, [0, 25, 50, 75, 100])
    return tuple(float(v) for v in q)


def word_count_stats(corpus):
    """Five-number summaries of per-document total and unique word counts.

    Counts use the plain tokenization (lowercased, specials stripped) so
    they describe the raw documents, not the stopword-filtered stream.
    """
    if not corpus:
        raise ValueError("empty corpus")
    totals, uniques = [], []
    for doc in corpus:
        tokens = simple_tokens(doc.text)
        totals.append(len(tokens))
        uniques.append(len(set(tokens)))
    totals = np.asarray(totals, dtype=np.int64)
    uniques = np.asarray(uniques, dtype=np.int64)
    return CorpusStats(
        totals=totals,
        uniques=uniques,
        total_summary=_five_number(totals),
        unique_summary=_five_number(uniques),
    )


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def read_corpus(path):
    """JSON Lines corpus: {"id": str, "text": str, "label": 0|1|null}."""
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            doc_id = str(obj["id"])
            if doc_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            label = obj.get("label")
            if label is not None:
                label = int(label)
                if label not in (0, 1):
                    raise ValueError(
                        f"{path}:{lineno}: label must be 0, 1, or null"
                    )
            docs.append(Document(id=doc_id, text=obj["text"], label=label))
    return docs


def write_corpus(docs, path):
    with open(path, "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(
                json.dumps(
                    {"id": doc.id, "text": doc.text, "label": doc.label},
                    ensure_ascii=False,
                )
                + "\n"
            )


def _format_value(v, weighting):
    if weighting in ("count", "binary"):
        return str(int(v))
    return repr(float(v))


def write_dtm(M, path):
    """Triplet text format: header "n_docs n_features nnz weighting",
    then one "row col value" line per entry, row-major sorted."""
    rows, cols, vals = M.to_triplets()
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{M.n_docs} {M.n_features} {M.nnz} {M.weighting}\n")
        for r, c, v in zip(rows, cols, vals):
            f.write(f"{r} {c} {_format_value(v, M.weighting)}\n")


def read_dtm(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: malformed DTM header")
        n_docs, n_features, nnz = (int(x) for x in header[:3])
        weighting = header[3]
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            parts = f.readline().split()
            if len(parts) != 3:
                raise ValueError(f"{path}: truncated at entry {k}")
            rows[k], cols[k], vals[k] = int(parts[0]), int(parts[1]), float(
                parts[2]
            )
    return DocTermMatrix(n_docs, n_features, rows, cols, vals, weighting)


def write_labels(labels, path):
    """Companion label file: one "row label" line per document."""
    with open(path, "w", encoding="utf-8") as f:
        for i, y in enumerate(labels):
            f.write(f"{i} {int(y)}\n")


def read_labels(path):
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split()
            if not line:
                continue
            pairs.append((int(line[0]), int(line[1])))
    pairs.sort()
    return np.asarray([y for _, y in pairs], dtype=np.int64)


def write_vocabulary(vocab, path):
    """Vocabulary file: "# n_max=K n_docs=D" header then "term index df"."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# n_max={vocab.n_max} n_docs={vocab.n_docs}\n")
        for term in vocab.terms():
            f.write(f"{term}\t{vocab.index[term]}\t{vocab.doc_freq[term]}\n")


def read_vocabulary(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        m = re.match(r"# n_max=(\d+) n_docs=(\d+)", header)
        if not m:
            raise ValueError(f"{path}: malformed vocabulary header")
        n_max, n_docs = int(m.group(1)), int(m.group(2))
        index, doc_freq = {}, {}
        for line in f:
            if not line.strip():
                continue
            term, j, df = line.rstrip("\n").split("\t")
            index[term] = int(j)
            doc_freq[term] = int(df)
    return Vocabulary(index=index, doc_freq=doc_freq, n_max=n_max,
                      n_docs=n_docs)


def idf_from_vocabulary(vocab):
    """Training-set IDF derived from stored document frequencies."""
    idf = np.ones(vocab.n_features)
    for term, j in vocab.index.items():
        idf[j] = math.log(
            (1.0 + vocab.n_docs) / (1.0 + vocab.doc_freq[term])
        ) + 1.0
    return idf
