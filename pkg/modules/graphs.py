# -*- coding: utf-8 -*-
"""
Graphs Module

クラスター展開の連結多重グラフを扱うモジュール。

- ラベル付き連結多重グラフ (タッドポールなし) の列挙と対称因子 sym(G) = Π l_ij!
- ガウス玩具模型での切断相関のグラフ和と、Wick 列挙 + Möbius 反転による独立なオラクル
- 虚時間引数の KMS 並べ替え
- 虚時間核の空間減衰率フィット
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import optimize

from .errors import FitError, GraphLimitError, InvariantViolation, ParameterError
from .model import MassSpectrum
from .quadrature import QuadratureConfig
from .thermal import kernel_profile, kms_kernel_imag_time

logger = logging.getLogger(__name__)

# Wick 列挙の総次数の上限
MAX_TOTAL_DEGREE = 16
# einsum の添字は1辺に2文字使う
EINSUM_LABELS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
MAX_EINSUM_EDGES = len(EINSUM_LABELS) // 2
DEFAULT_GRAPH_LIMIT = 100_000

# 多項式: 指数タプル → 係数
Polynomial = Dict[Tuple[int, ...], complex]
Edge = Tuple[int, int]


# ----------------------------------------------------------------------
# 多重グラフ
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class LabeledMultigraph:
    """頂点 0..n−1 上の多重グラフ。辺は s<r の順序対の辞書式に並んだ多重集合"""

    n_vertices: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ParameterError(f"n_vertices must be >= 1: {self.n_vertices}", field="n_vertices")
        for s, r in self.edges:
            if not 0 <= s < r < self.n_vertices:
                raise ParameterError(f"edges must satisfy 0 <= s < r < n: {(s, r)}", field="edges")
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))

    @classmethod
    def from_multiplicities(cls, n_vertices: int, multiplicities: Dict[Edge, int]) -> "LabeledMultigraph":
        edges: List[Edge] = []
        for pair, count in sorted(multiplicities.items()):
            edges.extend([pair] * count)
        return cls(n_vertices, tuple(edges))

    def multiplicities(self) -> Dict[Edge, int]:
        counts: Dict[Edge, int] = {}
        for edge in self.edges:
            counts[edge] = counts.get(edge, 0) + 1
        return counts

    def degrees(self) -> List[int]:
        degree = [0] * self.n_vertices
        for s, r in self.edges:
            degree[s] += 1
            degree[r] += 1
        return degree

    def to_networkx(self) -> nx.MultiGraph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(range(self.n_vertices))
        graph.add_edges_from(self.edges)
        return graph

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_record(self) -> Dict[str, Any]:
        """隣接多重度のJSON互換レコード"""
        return {
            "n_vertices": self.n_vertices,
            "edges": [list(e) for e in self.edges],
            "multiplicities": {f"{s}-{r}": l for (s, r), l in self.multiplicities().items()},
            "degrees": self.degrees(),
            "symmetry_factor": symmetry_factor(self),
        }


def symmetry_factor(g: LabeledMultigraph) -> int:
    """sym(G) = Π_{i<j} l_ij!"""
    return math.prod(math.factorial(l) for l in g.multiplicities().values())


def graph_records(graphs: Sequence[LabeledMultigraph]) -> List[Dict[str, Any]]:
    return [g.to_record() for g in graphs]


def _normalize_bounds(n_vertices: int, degree_bounds: Union[int, Sequence[int]]) -> List[int]:
    if isinstance(degree_bounds, (int, np.integer)):
        bounds = [int(degree_bounds)] * n_vertices
    else:
        bounds = [int(b) for b in degree_bounds]
    if len(bounds) != n_vertices:
        raise ParameterError(
            f"need one degree bound per vertex: {len(bounds)} != {n_vertices}", field="degree_bounds"
        )
    if any(b < 0 for b in bounds):
        raise ParameterError(f"degree bounds must be non-negative: {bounds}", field="degree_bounds")
    return bounds


def predicted_count(
    n_vertices: int, degree_bounds: Union[int, Sequence[int]], max_multiplicity: Optional[int] = None
) -> int:
    """列挙数の上界 Π_{i<j}(min(l_max, b_i, b_j) + 1)"""
    bounds = _normalize_bounds(n_vertices, degree_bounds)
    total = 1
    for i, j in itertools.combinations(range(n_vertices), 2):
        cap = min(bounds[i], bounds[j])
        if max_multiplicity is not None:
            cap = min(cap, max_multiplicity)
        total *= cap + 1
    return total


def enumerate_connected(
    n_vertices: int,
    degree_bounds: Union[int, Sequence[int]],
    max_multiplicity: Optional[int] = None,
    limit: int = DEFAULT_GRAPH_LIMIT,
) -> List[LabeledMultigraph]:
    """
    頂点 0..n−1 上の連結でタッドポールのない多重グラフをすべて列挙する

    Args:
        n_vertices: 頂点数
        degree_bounds: 頂点ごとの次数上限 (整数なら全頂点共通)
        max_multiplicity: 頂点対ごとの多重度上限 (None なら次数上限のみ)
        limit: 列挙数の上限

    Returns:
        辞書式の辺リスト順に並んだ重複のないグラフのリスト

    Raises:
        GraphLimitError: 予測数が limit を超える場合
    """
    bounds = _normalize_bounds(n_vertices, degree_bounds)
    estimate = predicted_count(n_vertices, bounds, max_multiplicity)
    if estimate > limit:
        raise GraphLimitError(
            f"predicted graph count {estimate} exceeds the limit {limit}", estimate=estimate, limit=limit
        )
    pairs = list(itertools.combinations(range(n_vertices), 2))
    found: List[LabeledMultigraph] = []
    remaining = list(bounds)
    chosen: Dict[Edge, int] = {}

    def assign(index: int) -> None:
        if index == len(pairs):
            graph = LabeledMultigraph.from_multiplicities(n_vertices, chosen)
            if graph.is_connected():
                found.append(graph)
            return
        i, j = pairs[index]
        cap = min(remaining[i], remaining[j])
        if max_multiplicity is not None:
            cap = min(cap, max_multiplicity)
        for count in range(cap + 1):
            if count:
                chosen[(i, j)] = count
            else:
                chosen.pop((i, j), None)
            remaining[i] -= count
            remaining[j] -= count
            assign(index + 1)
            remaining[i] += count
            remaining[j] += count
        chosen.pop((i, j), None)

    assign(0)
    found.sort(key=lambda g: g.edges)
    logger.debug("enumerated %d connected graphs (n=%d, bounds=%s)", len(found), n_vertices, bounds)
    return found


# ----------------------------------------------------------------------
# 多項式
# ----------------------------------------------------------------------
def poly_degree(poly: Polynomial) -> int:
    return max((sum(e) for e, c in poly.items() if c != 0), default=0)


def poly_multiply(a: Polynomial, b: Polynomial) -> Polynomial:
    product: Polynomial = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            product[key] = product.get(key, 0) + ca * cb
    return product


def _poly_derivative_pair(poly: Polynomial, a: int, b: int) -> Polynomial:
    # ∂_a ∂_b
    out: Polynomial = {}
    for exps, coeff in poly.items():
        e = list(exps)
        if e[a] == 0:
            continue
        c = coeff * e[a]
        e[a] -= 1
        if e[b] == 0:
            continue
        c *= e[b]
        e[b] -= 1
        key = tuple(e)
        out[key] = out.get(key, 0) + c
    return out


def apply_self_contractions(poly: Polynomial, kernel: np.ndarray) -> Polynomial:
    """
    e^{½Σ K_ab ∂_a∂_b} を多項式に作用させる (Wick 順序化の逆)

    A = :e^{½Γ}A: なので、通常の積の観測量を Wick 順序の形に直すのに使う。
    """
    k = kernel.shape[0]
    result: Polynomial = dict(poly)
    term: Polynomial = dict(poly)
    order = 1
    while term:
        nxt: Polynomial = {}
        for a in range(k):
            for b in range(k):
                if kernel[a, b] == 0:
                    continue
                for key, c in _poly_derivative_pair(term, a, b).items():
                    nxt[key] = nxt.get(key, 0) + 0.5 * kernel[a, b] * c / order
        nxt = {key: c for key, c in nxt.items() if c != 0}
        for key, c in nxt.items():
            result[key] = result.get(key, 0) + c
        term = nxt
        order += 1
    return result


def derivative_tensor(poly: Polynomial, degree: int, k: int) -> np.ndarray:
    """多項式の次数 degree の斉次部分の原点での全微分テンソル ∂_{a1}…∂_{ad}"""
    tensor = np.zeros((k,) * degree, dtype=complex)
    for exps, coeff in poly.items():
        if sum(exps) != degree:
            continue
        indices = [a for a, count in enumerate(exps) for _ in range(count)]
        value = coeff * math.prod(math.factorial(c) for c in exps)
        for perm in set(itertools.permutations(indices)):
            tensor[perm] = value
    return tensor


# ----------------------------------------------------------------------
# ガウス玩具模型
# ----------------------------------------------------------------------
@dataclass
class GaussianToyModel:
    """共分散 K を持つ k 変数のガウス測度と多項式観測量のリスト"""

    covariance: np.ndarray
    observables: List[Polynomial] = field(default_factory=list)
    wick_ordered: bool = False

    def __post_init__(self):
        self.covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        k = self.covariance.shape[0]
        if self.covariance.shape != (k, k):
            raise ParameterError(f"covariance must be square: {self.covariance.shape}", field="covariance")
        if not np.allclose(self.covariance, self.covariance.T, rtol=0.0, atol=1e-12):
            raise ParameterError("covariance must be symmetric", field="covariance")
        scale = max(float(np.max(np.abs(self.covariance))), 1e-300)
        if np.min(np.linalg.eigvalsh(self.covariance)) < -1e-12 * scale:
            raise ParameterError("covariance must be positive semidefinite", field="covariance")
        if not self.observables:
            raise ParameterError("at least one observable is required", field="observables")
        for poly in self.observables:
            for exps in poly:
                if len(exps) != k or any(e < 0 for e in exps):
                    raise ParameterError(f"invalid exponent tuple {exps} for k={k}", field="observables")

    @property
    def k(self) -> int:
        return self.covariance.shape[0]

    @property
    def degrees(self) -> List[int]:
        return [poly_degree(p) for p in self.observables]


def monomial(k: int, **powers: int) -> Polynomial:
    """x_a^n の単項式 (例: monomial(2, x0=2) は x₀²)"""
    exps = [0] * k
    for name, power in powers.items():
        exps[int(name.lstrip("x"))] = power
    return {tuple(exps): 1.0}


def _graph_term(
    graph: LabeledMultigraph,
    tensors: List[Dict[int, np.ndarray]],
    kernel: Callable[[int, int], np.ndarray],
) -> complex:
    if len(graph.edges) > MAX_EINSUM_EDGES:
        raise GraphLimitError(
            f"graph has {len(graph.edges)} edges; at most {MAX_EINSUM_EDGES} can be contracted",
            edges=len(graph.edges),
        )
    degrees = graph.degrees()
    operands: List[np.ndarray] = []
    subscripts: List[str] = []
    letters = iter(EINSUM_LABELS)
    slots: List[List[str]] = [[] for _ in range(graph.n_vertices)]
    for s, r in graph.edges:
        left, right = next(letters), next(letters)
        slots[s].append(left)
        slots[r].append(right)
        operands.append(np.asarray(kernel(s, r)))
        subscripts.append(left + right)
    for v in range(graph.n_vertices):
        tensor = tensors[v].get(degrees[v])
        if tensor is None:
            return 0j
        operands.append(tensor)
        subscripts.append("".join(slots[v]))
    value = np.einsum(",".join(subscripts) + "->", *operands)
    return complex(value) / symmetry_factor(graph)


def graphsum_with_kernel(
    observables: Sequence[Polynomial],
    kernel: Callable[[int, int], np.ndarray],
    k: int,
    wick_ordered: bool = True,
    threads: int = 1,
) -> complex:
    """
    辺ごとに異なる核 K^{(s,r)} を持つ連結グラフ和

    Σ_G (1/sym G)·[Π_{l∈E(G)} Σ_ab K^{(s(l),r(l))}_ab ∂^{s(l)}_a ∂^{r(l)}_b] Π_i A_i |_{x=0}

    wick_ordered=False なら各観測量に先に e^{½Σ K^{(i,i)}∂∂} を作用させる。

    Args:
        observables: 多項式観測量
        kernel: (s, r) → k×k 行列 (s < r、自己縮約では s = r)
        k: 変数の数
        wick_ordered: 観測量が Wick 順序済みか
        threads: グラフごとの評価に使うスレッド数
    """
    polys = list(observables)
    if not wick_ordered:
        polys = [apply_self_contractions(p, np.asarray(kernel(i, i))) for i, p in enumerate(polys)]
    degrees = [poly_degree(p) for p in polys]
    if sum(degrees) // 2 > MAX_EINSUM_EDGES:
        raise GraphLimitError(
            f"total degree {sum(degrees)} allows more than {MAX_EINSUM_EDGES} edges per graph",
            total_degree=sum(degrees),
        )
    tensors = [{d: derivative_tensor(p, d, k) for d in range(deg + 1)} for p, deg in zip(polys, degrees)]
    graphs = enumerate_connected(len(polys), degrees)

    def evaluate(graph: LabeledMultigraph) -> complex:
        return _graph_term(graph, tensors, kernel)

    if threads > 1 and len(graphs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(evaluate, graphs))
    else:
        terms = [evaluate(g) for g in graphs]
    return complex(sum(terms))


def graphsum_truncated(toy: GaussianToyModel, threads: int = 1) -> complex:
    """
    ガウス玩具模型の切断相関 ⟨A₁; …; A_n⟩_T を連結グラフ和で評価する

    観測量1個なら1頂点グラフのみでガウス平均になる。
    """
    covariance = toy.covariance
    value = graphsum_with_kernel(
        toy.observables, lambda s, r: covariance, toy.k, wick_ordered=toy.wick_ordered, threads=threads
    )
    return _real_if_close(value)


def _real_if_close(value: complex) -> Union[float, complex]:
    if abs(value.imag) <= 1e-14 * max(1.0, abs(value.real)):
        return value.real
    return value


def _set_partitions(items: List[int]) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest):
        for index in range(len(partition)):
            yield partition[:index] + [[first] + partition[index]] + partition[index + 1:]
        yield [[first]] + partition


def cumulant_oracle(toy: GaussianToyModel) -> Union[float, complex]:
    """
    グラフ和と独立な切断相関のオラクル

    ガウスモーメントを Isserlis の漸化式 E[x_a x^m] = Σ_b K_ab m_b E[x^{m−e_b}] で
    列挙し、集合分割上の Möbius 反転 (−1)^{k−1}(k−1)! で切断する。

    Raises:
        GraphLimitError: 観測量の総次数が16を超える場合
    """
    total = sum(toy.degrees)
    if total > MAX_TOTAL_DEGREE:
        raise GraphLimitError(
            f"total degree {total} exceeds the Wick enumeration guard {MAX_TOTAL_DEGREE}"
        )
    if toy.wick_ordered:
        raise ParameterError("the cumulant oracle works with plain (non Wick-ordered) observables")
    covariance = toy.covariance
    k = toy.k

    @lru_cache(maxsize=None)
    def moment(exps: Tuple[int, ...]) -> float:
        if sum(exps) == 0:
            return 1.0
        if sum(exps) % 2:
            return 0.0
        a = next(i for i, e in enumerate(exps) if e > 0)
        reduced = list(exps)
        reduced[a] -= 1
        value = 0.0
        for b in range(k):
            if reduced[b] == 0 or covariance[a, b] == 0:
                continue
            nxt = list(reduced)
            nxt[b] -= 1
            value += covariance[a, b] * reduced[b] * moment(tuple(nxt))
        return value

    def expectation(block: Sequence[int]) -> complex:
        poly: Polynomial = {tuple([0] * k): 1.0}
        for index in block:
            poly = poly_multiply(poly, toy.observables[index])
        return sum(c * moment(e) for e, c in poly.items())

    cache: Dict[Tuple[int, ...], complex] = {}
    result = 0j
    for partition in _set_partitions(list(range(len(toy.observables)))):
        blocks = len(partition)
        term = (-1) ** (blocks - 1) * math.factorial(blocks - 1)
        for block in partition:
            key = tuple(sorted(block))
            if key not in cache:
                cache[key] = expectation(key)
            term *= cache[key]
        result += term
    return _real_if_close(complex(result))


def random_toy(
    rng: np.random.Generator, k_max: int = 3, degree_max: int = 4, n_observables: Optional[int] = None
) -> GaussianToyModel:
    """交差検証用のランダムなガウス玩具模型"""
    k = int(rng.integers(1, k_max + 1))
    basis = rng.normal(size=(k, k))
    covariance = basis @ basis.T / k
    n = n_observables or int(rng.integers(1, 4))
    observables: List[Polynomial] = []
    for _ in range(n):
        poly: Polynomial = {}
        for _ in range(int(rng.integers(1, 4))):
            degree = int(rng.integers(1, degree_max + 1))
            exps = [0] * k
            for _ in range(degree):
                exps[int(rng.integers(0, k))] += 1
            key = tuple(exps)
            poly[key] = poly.get(key, 0) + float(rng.normal())
        observables.append(poly)
    return GaussianToyModel(covariance=covariance, observables=observables)


def thermal_wick_square_correlation(
    u: float,
    r: float,
    ms: MassSpectrum,
    mu: float,
    beta: float,
    component: int = 1,
    quad: Optional[QuadratureConfig] = None,
) -> float:
    """
    ⟨:ψ_a²:(0, 0); :ψ_a²:(u, r)⟩_T を虚時間核を辺の核としたグラフ和で評価する

    2頂点で二重辺の1グラフだけが寄与し、2·G_aa(u, r)² になる。
    """
    if component not in (1, 2):
        raise ParameterError(f"component must be 1 or 2: {component}", field="component")
    kernel = kms_kernel_imag_time(u, r, ms, mu, beta, quad).to_matrix()
    a = component - 1
    square = monomial(2, **{f"x{a}": 2})
    value = graphsum_with_kernel([square, square], lambda s, t: kernel, 2, wick_ordered=True)
    return float(value.real)


# ----------------------------------------------------------------------
# KMS 並べ替え
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class KMSReordering:
    """巡回シフトした虚時間差 v と空間差 y"""

    v: Tuple[float, ...]
    y: Tuple[Tuple[float, ...], ...]
    m: int
    gap: float


def kms_reorder(
    u: Sequence[float], x: Sequence[Sequence[float]], beta: float, m: Optional[int] = None
) -> KMSReordering:
    """
    0 = u₀ ≤ u₁ ≤ … ≤ u_n ≤ β の虚時間引数を点 m から巡回的に並べ替える

    v = (u_{m+1}−u_m, …, u_n−u_m, β−u_m, β+u₁−u_m, …, β+u_{m−1}−u_m)
    y = (x_{m+1}−x_m, …, x_n−x_m, −x_m, x₁−x_m, …, x_{m−1}−x_m)

    m を省略すると最大の間隔の直後の点を選ぶ。このとき β − v_n ≥ β/(n+1)。
    """
    u = [float(t) for t in u]
    n = len(u)
    xs = [tuple(float(c) for c in vec) for vec in x]
    if len(xs) != n:
        raise ParameterError("u and x must have the same length", field="x")
    if any(b < a for a, b in zip([0.0] + u, u + [beta])):
        raise ParameterError("u must be sorted within [0, beta]", field="u")
    gaps = [b - a for a, b in zip([0.0] + u, u + [beta])]
    if m is None:
        m = max(range(n + 1), key=lambda j: (gaps[j - 1] if j >= 1 else gaps[n], -j))
    if not 0 <= m <= n:
        raise ParameterError(f"m must lie in [0, n]: {m}", field="m")
    if m == 0:
        return KMSReordering(v=tuple(u), y=tuple(xs), m=0, gap=gaps[n])
    u_m = u[m - 1]
    x_m = xs[m - 1]

    def shifted(vec: Tuple[float, ...]) -> Tuple[float, ...]:
        return tuple(a - b for a, b in zip(vec, x_m))

    v = [u[j - 1] - u_m for j in range(m + 1, n + 1)] + [beta - u_m]
    v += [beta + u[j - 1] - u_m for j in range(1, m)]
    y = [shifted(xs[j - 1]) for j in range(m + 1, n + 1)] + [tuple(-c for c in x_m)]
    y += [shifted(xs[j - 1]) for j in range(1, m)]
    return KMSReordering(v=tuple(v), y=tuple(y), m=m, gap=gaps[m - 1])


def kms_restore(reordering: KMSReordering, beta: float) -> Tuple[List[float], List[Tuple[float, ...]]]:
    """kms_reorder の逆写像"""
    v, y, m = list(reordering.v), list(reordering.y), reordering.m
    n = len(v)
    if m == 0:
        return v, [tuple(vec) for vec in y]
    u_m = beta - v[n - m]
    x_m = tuple(-c for c in y[n - m])
    u = [0.0] * n
    x: List[Tuple[float, ...]] = [()] * n
    u[m - 1] = u_m
    x[m - 1] = x_m
    for j in range(m + 1, n + 1):
        u[j - 1] = v[j - m - 1] + u_m
        x[j - 1] = tuple(a + b for a, b in zip(y[j - m - 1], x_m))
    for j in range(1, m):
        u[j - 1] = v[n - m + j] - beta + u_m
        x[j - 1] = tuple(a + b for a, b in zip(y[n - m + j], x_m))
    return u, x


# ----------------------------------------------------------------------
# 減衰率フィット
# ----------------------------------------------------------------------
@dataclass
class DecayFit:
    """log(r·max|G|) の直線フィット結果"""

    rate: float
    intercept: float
    r_squared: float
    monotone: bool
    lower_bound: float
    u: float
    r_grid: List[float]
    magnitudes: List[float]

    @property
    def ratio(self) -> float:
        """rate / M₂"""
        return self.rate / (self.lower_bound / 0.9) if self.lower_bound > 0 else math.inf

    def to_dict(self) -> Dict[str, Any]:
        return {
            "u": self.u,
            "rate": self.rate,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "monotone": self.monotone,
            "lower_bound": self.lower_bound,
            "ratio": self.ratio,
        }


def _linear(r: np.ndarray, slope: float, intercept: float) -> np.ndarray:
    return slope * r + intercept


def cluster_decay_fit(
    ms: MassSpectrum,
    mu: float,
    beta: float,
    u: float,
    r_grid: Sequence[float],
    quad: Optional[QuadratureConfig] = None,
    method: str = "matsubara",
    min_r_squared: float = 0.98,
    enforce_bound: bool = True,
    vacuum_subtracted: bool = False,
) -> DecayFit:
    """
    虚時間核の空間減衰率をフィットする

    max_ij |G_ij(u, r)| を r グリッドで評価し、湯川型の 1/r を外した
    log(r·max|G|) を r について最小二乗で直線フィットして −傾き を返す。
    下限は 0.9·M₋、M₋ = √(M²−δM²) = M₂。
    vacuum_subtracted=True では真空部分を差し引いた熱的な核をフィットする
    (matsubara 法は使えない)。

    Raises:
        ParameterError: ギャップのないスペクトル、点が3未満
        FitError: 単調でないデータ、または R² < min_r_squared
        InvariantViolation: enforce_bound=True で rate < 0.9·M₂
    """
    if not ms.M2_sq > 0:
        raise ParameterError("decay fit requires a gapped spectrum (M2_sq > 0)", field="M2_sq")
    r = np.asarray(sorted(float(x) for x in r_grid))
    if r.size < 3 or np.any(np.diff(r) <= 0):
        raise ParameterError("r_grid needs at least 3 strictly increasing points", field="r_grid")
    kernels = kernel_profile(u, r, ms, mu, beta, quad, method=method, vacuum_subtracted=vacuum_subtracted)
    magnitudes = np.array([g.max_abs() for g in kernels])
    monotone = bool(np.all(np.diff(magnitudes) < 0))
    if not monotone or np.any(magnitudes <= 0):
        raise FitError("kernel magnitude is not monotonically decreasing on r_grid", u=u)
    y = np.log(r * magnitudes)
    slope0 = (y[-1] - y[0]) / (r[-1] - r[0])
    (slope, intercept), _ = optimize.curve_fit(_linear, r, y, p0=[slope0, y[0] - slope0 * r[0]])
    residual = y - _linear(r, slope, intercept)
    spread = np.sum((y - np.mean(y)) ** 2)
    r_squared = 1.0 - float(np.sum(residual**2)) / spread if spread > 0 else 1.0
    bound = 0.9 * math.sqrt(ms.M2_sq)
    fit = DecayFit(
        rate=float(-slope),
        intercept=float(intercept),
        r_squared=r_squared,
        monotone=monotone,
        lower_bound=bound,
        u=u,
        r_grid=[float(x) for x in r],
        magnitudes=[float(x) for x in magnitudes],
    )
    logger.info("decay fit at u=%.4g: rate=%.8g (bound %.6g), R^2=%.6f", u, fit.rate, bound, r_squared)
    if r_squared < min_r_squared:
        raise FitError(f"decay fit rejected: R^2 = {r_squared:.4f} < {min_r_squared}", r_squared=r_squared)
    if enforce_bound and fit.rate < bound:
        raise InvariantViolation(
            f"fitted decay rate {fit.rate:.6g} below 0.9*M2 = {bound:.6g}", rate=fit.rate, bound=bound
        )
    return fit
