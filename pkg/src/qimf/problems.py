"""Benchmark problem builders: portfolio selection, weighted max-cut, Ising.

Portfolio instances fold the risk/return trade-off into a single matrix:
``Q_ij = lam * V_ij`` off the diagonal and ``Q_ii = lam * V_ii - (1 - lam)
* r_i`` on it, so that ``x'Qx = lam * x'Vx - (1 - lam) * r'x`` for binary x.

Price ingestion uses simple daily returns (``p_t / p_{t-1} - 1``), the
sample covariance with denominator T-1, and complete-case filtering: any
date missing a price for some ticker is dropped entirely.  Tickers are
reordered block-contiguously by sector (sectors and tickers both sorted
alphabetically) and the sector index becomes the block label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .hamiltonian import IsingHamiltonian, PauliTerm
from .instance import QuboInstance


class IngestError(ValueError):
    """Raised for malformed or inconsistent price/sector inputs."""


@dataclass
class PriceTable:
    """Aligned closing prices: every ticker has one price per date."""

    dates: list[str]
    prices: dict[str, tuple[float, ...]]
    sectors: dict[str, str]

    def __post_init__(self):
        for ticker, series in self.prices.items():
            if len(series) != len(self.dates):
                raise IngestError(f"ticker {ticker} has {len(series)} prices "
                                  f"for {len(self.dates)} dates")
            if any(p <= 0 for p in series):
                raise IngestError(f"ticker {ticker} has a non-positive price")
            if ticker not in self.sectors:
                raise IngestError(f"ticker {ticker} has no sector")


@dataclass(frozen=True)
class Graph:
    """Weighted undirected graph as an edge list with u < v."""

    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen = set()
        for u, v, _ in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not 0 <= u < v < self.num_nodes:
                raise ValueError(f"edge ({u}, {v}) violates 0 <= u < v < "
                                 f"{self.num_nodes}")
            if (u, v) in seen:
                raise ValueError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))


def build_portfolio(v: np.ndarray, returns: np.ndarray,
                    risk_weight: float) -> QuboInstance:
    """Instance whose quadratic form equals risk minus weighted return."""
    v = np.asarray(v, dtype=float)
    returns = np.asarray(returns, dtype=float)
    n = v.shape[0]
    if v.shape != (n, n):
        raise ValueError(f"covariance must be square, got {v.shape}")
    if not np.array_equal(v, v.T):
        raise ValueError("covariance matrix must be symmetric")
    if returns.shape != (n,):
        raise ValueError(f"returns length {returns.shape} does not match "
                         f"{n} assets")
    if not 0.0 <= risk_weight <= 1.0:
        raise ValueError(f"risk weight must lie in [0, 1], got {risk_weight}")

    matrix: dict[tuple[int, int], float] = {}
    for i in range(n):
        d = risk_weight * v[i, i] - (1.0 - risk_weight) * returns[i]
        if d != 0.0:
            matrix[(i, i)] = d
        for j in range(i + 1, n):
            q = risk_weight * v[i, j]
            if q != 0.0:
                matrix[(i, j)] = q
    meta = {"problem": "portfolio", "lambda": repr(float(risk_weight)),
            "returns": "daily-simple", "covariance": "sample-ddof1"}
    return QuboInstance(num_vars=n, matrix=matrix, metadata=meta)


def build_maxcut(g: Graph) -> QuboInstance:
    """Instance with ``x'Qx = -cut(x)``; minimizing maximizes the cut."""
    matrix: dict[tuple[int, int], float] = {}
    diag = np.zeros(g.num_nodes)
    for u, v, w in g.edges:
        matrix[(u, v)] = matrix.get((u, v), 0.0) + w
        diag[u] -= w
        diag[v] -= w
    for i in range(g.num_nodes):
        if diag[i] != 0.0:
            matrix[(i, i)] = diag[i]
    matrix = {k: val for k, val in matrix.items() if val != 0.0}
    return QuboInstance(num_vars=g.num_nodes, matrix=matrix,
                        metadata={"problem": "maxcut"})


def cut_value(g: Graph, x) -> float:
    """Total weight of edges crossing the partition."""
    x = np.asarray(x)
    return float(sum(w for u, v, w in g.edges if x[u] != x[v]))


def build_ising(couplings, fields) -> IsingHamiltonian:
    """Hamiltonian ``sum J_ij Z_i Z_j + sum h_i Z_i`` with zero offset."""
    pair_terms: dict[tuple[int, int], float] = {}
    for i, j, jval in couplings:
        if i == j:
            raise ValueError(f"coupling ({i}, {j}) must join distinct sites")
        key = (min(i, j), max(i, j))
        if key in pair_terms:
            raise ValueError(f"duplicate coupling {key}")
        pair_terms[key] = float(jval)
    field_terms: dict[int, float] = {}
    for i, hval in fields:
        if i in field_terms:
            raise ValueError(f"duplicate field on site {i}")
        field_terms[i] = float(hval)

    sites = {i for pair in pair_terms for i in pair} | set(field_terms)
    num_qubits = (max(sites) + 1) if sites else 1
    terms = [PauliTerm(c, (i,)) for i, c in sorted(field_terms.items()) if c != 0.0]
    terms.extend(PauliTerm(c, key) for key, c in sorted(pair_terms.items())
                 if c != 0.0)
    return IsingHamiltonian(num_qubits=num_qubits, terms=terms, offset=0.0)


# ---------------------------------------------------------------------------
# Price ingestion
# ---------------------------------------------------------------------------


def _read_csv(path, expected_header: list[str]) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != expected_header:
        raise IngestError(f"{path}: expected header {','.join(expected_header)!r}")
    return [row for row in rows[1:] if row and any(cell.strip() for cell in row)]


def load_price_table(prices_path, sectors_path) -> PriceTable:
    """Read the two CSVs and align them (complete-case over dates)."""
    sector_of: dict[str, str] = {}
    for k, row in enumerate(_read_csv(sectors_path, ["ticker", "sector"])):
        if len(row) != 2:
            raise IngestError(f"{sectors_path}: row {k + 2} needs 2 fields")
        ticker, sector = row[0].strip(), row[1].strip()
        if ticker in sector_of:
            raise IngestError(f"{sectors_path}: duplicate ticker {ticker}")
        sector_of[ticker] = sector

    by_date: dict[str, dict[str, float]] = {}
    tickers: set[str] = set()
    for k, row in enumerate(_read_csv(prices_path, ["date", "ticker", "close"])):
        if len(row) != 3:
            raise IngestError(f"{prices_path}: row {k + 2} needs 3 fields")
        date, ticker = row[0].strip(), row[1].strip()
        try:
            close = float(row[2])
        except ValueError:
            raise IngestError(f"{prices_path}: row {k + 2} has a non-numeric "
                              f"close {row[2]!r}") from None
        if close <= 0:
            raise IngestError(f"{prices_path}: row {k + 2} has non-positive "
                              f"price {close} for {ticker}")
        if ticker not in sector_of:
            raise IngestError(f"{sectors_path} is missing ticker {ticker}")
        day = by_date.setdefault(date, {})
        if ticker in day:
            raise IngestError(f"{prices_path}: duplicate price for {ticker} "
                              f"on {date}")
        day[ticker] = close
        tickers.add(ticker)

    unknown = sorted(set(sector_of) - tickers)
    if unknown:
        raise IngestError(f"{sectors_path} names unknown ticker {unknown[0]}")
    if not tickers:
        raise IngestError(f"{prices_path} holds no price rows")

    complete = [d for d in sorted(by_date) if set(by_date[d]) == tickers]
    if len(complete) < 2:
        raise IngestError(f"only {len(complete)} dates have prices for every "
                          f"ticker; need at least 2")
    prices = {t: tuple(by_date[d][t] for d in complete) for t in sorted(tickers)}
    return PriceTable(dates=complete, prices=prices,
                      sectors={t: sector_of[t] for t in sorted(tickers)})


def portfolio_inputs(table: PriceTable) -> tuple[np.ndarray, np.ndarray,
                                                 tuple[int, ...], list[str]]:
    """Covariance, mean returns, block labels, and ticker order."""
    ordered = sorted(table.prices, key=lambda t: (table.sectors[t], t))
    sectors = sorted({table.sectors[t] for t in ordered})
    sector_index = {s: k for k, s in enumerate(sectors)}
    labels = tuple(sector_index[table.sectors[t]] for t in ordered)

    series = np.array([table.prices[t] for t in ordered], dtype=float)
    rets = series[:, 1:] / series[:, :-1] - 1.0
    mean_returns = rets.mean(axis=1)
    if rets.shape[1] < 2:
        cov = np.zeros((len(ordered), len(ordered)))
    else:
        cov = np.atleast_2d(np.cov(rets, ddof=1))
        cov = (cov + cov.T) / 2.0  # force exact symmetry
    return cov, mean_returns, labels, ordered


def ingest_prices(prices_path, sectors_path) -> tuple[np.ndarray, np.ndarray,
                                                      tuple[int, ...]]:
    """Covariance, mean daily returns, and sector block labels from CSVs."""
    cov, mean_returns, labels, _ = portfolio_inputs(load_price_table(
        prices_path, sectors_path))
    return cov, mean_returns, labels


def read_edge_list(path) -> Graph:
    """Parse ``u v w`` lines (blank lines and # comments skipped)."""
    edges: list[tuple[int, int, float]] = []
    max_node = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'u v w', "
                                 f"got {text!r}")
            try:
                u, v, w = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad edge {text!r}") from None
            if u == v:
                raise ValueError(f"{path}:{lineno}: self-loop on {u}")
            edges.append((min(u, v), max(u, v), w))
            max_node = max(max_node, u, v)
    return Graph(num_nodes=max_node + 1, edges=tuple(edges))
