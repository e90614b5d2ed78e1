"""Max-entropy spanning trees: polytope membership, lambda fit, sampling.

The fitter runs multiplicative weights on exact matrix-tree marginals
(doubles, with an exact-rational fallback for small graphs).  Edges with
x_e = 1 are contracted before fitting: the target distribution gives
them probability one, so conditioning equals contraction.

Sampling is sequential edge conditioning in ascending edge id: compute
the conditional marginal, flip a Bernoulli, contract or delete.  Given
perfect marginal computation the output law is exactly mu_lambda; the
marginals are doubles, which is the documented caveat.  Bridges are
detected combinatorially and forced, so rounding can never disconnect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoConvergence, SingularLaplacian, TooLarge
from .instances import SupportGraph

_EXHAUSTIVE_BOUND = 22


class _DSU:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def check_spanning_tree_polytope(n: int, edges, x: dict):
    """Membership verdict + witness for Edmonds' spanning tree polytope.

    `edges` is a list of (edge_id, u, v); `x` maps edge_id to Fraction.
    Fast path: when every vertex has x(delta(v)) = 2 exactly, membership
    reduces to the exact global min cut being >= 2.  Otherwise exhaustive
    subset scan for n <= 22.
    Returns (True, None) or (False, witness_vertex_list).
    """
    x = {e: Fraction(v) for e, v in x.items()}
    total = sum((x[eid] for eid, _, _ in edges), Fraction(0))
    if total != n - 1:
        return False, list(range(n))

    degrees = [Fraction(0)] * n
    for eid, u, v in edges:
        degrees[u] += x[eid]
        degrees[v] += x[eid]
    if all(d == 2 for d in degrees):
        from .mincut import stoer_wagner
        from .errors import DisconnectedSupport
        try:
            value, side = stoer_wagner(
                n, [(u, v, x[eid]) for eid, u, v in edges if x[eid] > 0]
            )
        except DisconnectedSupport as exc:
            return False, exc.component
        if value < 2:
            return False, side
        return True, None

    if n > _EXHAUSTIVE_BOUND:
        raise TooLarge(f"exhaustive membership check limited to n <= {_EXHAUSTIVE_BOUND}")
    # Gray-code scan of x(E(S)) over all S
    inside = Fraction(0)
    in_s = [False] * n
    size = 0
    incident = [[] for _ in range(n)]
    for eid, u, v in edges:
        incident[u].append((v, x[eid]))
        incident[v].append((u, x[eid]))
    for g in range(1, 1 << n):
        v = (g & -g).bit_length() - 1
        delta = sum((w for u, w in incident[v] if in_s[u]), Fraction(0))
        if in_s[v]:
            in_s[v] = False
            size -= 1
            inside -= delta
        else:
            inside += delta
            in_s[v] = True
            size += 1
        if size >= 1 and inside > size - 1:
            return False, [u for u in range(n) if in_s[u]]
    return True, None


def support_in_tree_polytope(support: SupportGraph):
    """Membership of x restricted to E, via the degree-2 + min-cut reduction.

    With x^0 degrees all 2 on E_0 = E + e_0 and the exact global min cut
    of (V, E_0, x^0) at least 2, x (on E) lies in the spanning tree
    polytope; x(E) = n - 1 holds because x(e_0) = 1.
    """
    from .errors import DisconnectedSupport
    from .mincut import stoer_wagner

    total = sum((e.x for e in support.edges), Fraction(0))
    if total != support.n_vertices - 1:
        return False, support.root_free_vertices
    support.validate()  # degrees exactly 2 on E_0
    weighted = [(e.u, e.v, e.x) for e in support.edges if e.x > 0]
    weighted.append((support.u0, support.v0, Fraction(1)))
    try:
        value, side = stoer_wagner(support.n_vertices, weighted)
    except DisconnectedSupport as exc:
        return False, exc.component
    if value < 2:
        return False, side
    return True, None


@dataclass
class Lambda:
    """Fitted edge weights for the lambda-uniform tree distribution."""

    n_vertices: int
    edges: tuple  # (edge_id, u, v) for every tree edge
    x: dict  # edge_id -> Fraction target marginal
    log_lambda: dict  # edge_id -> float, for non-forced edges
    forced: frozenset  # edge ids with x_e = 1, always in the tree
    eps_fit: float
    max_deviation: float
    iterations: int

    def weight(self, eid: int) -> float:
        return math.exp(self.log_lambda[eid])


@dataclass(frozen=True)
class TreeSample:
    """A spanning tree with its provenance and cached parities."""

    edges: frozenset  # edge ids
    seed: tuple
    draw_index: int
    parity_odd: tuple = field(default=(), compare=False)  # odd-degree vertices in T+e0


def _contracted(n_vertices, edges, forced):
    dsu = _DSU(n_vertices)
    for eid, u, v in edges:
        if eid in forced:
            dsu.union(u, v)
    roots = sorted({dsu.find(v) for v in range(n_vertices)})
    index = {r: i for i, r in enumerate(roots)}
    mapped = []
    for eid, u, v in edges:
        if eid in forced:
            continue
        a, b = index[dsu.find(u)], index[dsu.find(v)]
        if a == b:
            raise SingularLaplacian(
                f"edge {eid} became a self-loop under x=1 contraction; "
                "x is outside the spanning tree polytope"
            )
        mapped.append((eid, a, b))
    return len(roots), mapped


def _marginals_float(k, mapped, weights):
    """Matrix-tree marginals on a k-vertex multigraph, float path."""
    if k <= 1:
        return {}
    L = np.zeros((k, k))
    for (eid, a, b) in mapped:
        w = weights[eid]
        L[a, a] += w
        L[b, b] += w
        L[a, b] -= w
        L[b, a] -= w
    Lr = L[: k - 1, : k - 1]
    B = np.zeros((k - 1, len(mapped)))
    for col, (eid, a, b) in enumerate(mapped):
        if a < k - 1:
            B[a, col] = 1.0
        if b < k - 1:
            B[b, col] = -1.0
    try:
        X = np.linalg.solve(Lr, B)
    except np.linalg.LinAlgError as exc:
        raise SingularLaplacian(str(exc)) from exc
    out = {}
    for col, (eid, a, b) in enumerate(mapped):
        out[eid] = weights[eid] * float(B[:, col] @ X[:, col])
    return out


def _marginals_exact(k, mapped, weights):
    """Exact-rational fallback; weights must be Fractions, k small."""
    if k <= 1:
        return {}
    size = k - 1
    L = [[Fraction(0)] * size for _ in range(size)]
    for (eid, a, b) in mapped:
        w = weights[eid]
        if a < size:
            L[a][a] += w
        if b < size:
            L[b][b] += w
        if a < size and b < size:
            L[a][b] -= w
            L[b][a] -= w
    cols = {}
    for col, (eid, a, b) in enumerate(mapped):
        rhs = [Fraction(0)] * size
        if a < size:
            rhs[a] = Fraction(1)
        if b < size:
            rhs[b] -= 1
        cols[eid] = (rhs, col)
    # one LU-style elimination reused for all right-hand sides
    A = [row[:] for row in L]
    rhs_mat = {eid: rhs[:] for eid, (rhs, _) in cols.items()}
    order = []
    for i in range(size):
        piv = next((r for r in range(i, size) if A[r][i] != 0), None)
        if piv is None:
            raise SingularLaplacian("exact Laplacian singular")
        A[i], A[piv] = A[piv], A[i]
        for rhs in rhs_mat.values():
            rhs[i], rhs[piv] = rhs[piv], rhs[i]
        inv = 1 / A[i][i]
        for r in range(i + 1, size):
            f = A[r][i] * inv
            if f:
                for c in range(i, size):
                    A[r][c] -= f * A[i][c]
                for rhs in rhs_mat.values():
                    if rhs[i]:
                        rhs[r] -= f * rhs[i]
        order.append(i)
    out = {}
    for eid2, (orig, col) in cols.items():
        rhs = rhs_mat[eid2]
        sol = [Fraction(0)] * size
        for i in reversed(range(size)):
            s = rhs[i] - sum(A[i][c] * sol[c] for c in range(i + 1, size) if A[i][c])
            sol[i] = s / A[i][i]
        (eid, a, b) = mapped[col]
        phi = (sol[a] if a < size else Fraction(0)) - (sol[b] if b < size else Fraction(0))
        out[eid2] = weights[eid2] * phi
    return out


def tree_marginals(lam: Lambda, exact: bool = False):
    """Per-edge P[e in T] under mu_lambda; forced edges report 1."""
    k, mapped = _contracted(lam.n_vertices, lam.edges, lam.forced)
    if exact:
        weights = {eid: Fraction(math.exp(lam.log_lambda[eid])) for eid, _, _ in mapped}
        margins = _marginals_exact(k, mapped, weights)
        margins = {eid: float(v) for eid, v in margins.items()}
    else:
        weights = {eid: math.exp(lam.log_lambda[eid]) for eid, _, _ in mapped}
        margins = _marginals_float(k, mapped, weights)
        total = sum(margins.values())
        if mapped and abs(total - (k - 1)) > 1e-9:
            if k <= 12:
                return tree_marginals(lam, exact=True)
            raise SingularLaplacian(
                f"marginal mass {total} != {k - 1}; ill-conditioned Laplacian"
            )
    out = {eid: 1.0 for eid in lam.forced}
    out.update(margins)
    return out


def fit_lambda(n_vertices: int, edges, x: dict, eps_fit: float = 1e-6,
               max_iters: int = 20000) -> Lambda:
    """Fit lambda so mu_lambda marginals match x within eps_fit (max norm).

    Multiplicative-weight iteration: scale lambda_e by (x_e/marginal_e)^step.
    Requires x inside the spanning tree polytope.
    """
    x = {eid: Fraction(v) for eid, v in x.items()}
    ok, witness = check_spanning_tree_polytope(n_vertices, list(edges), x)
    if not ok:
        raise SingularLaplacian(f"x outside spanning tree polytope, witness {witness}")
    forced = frozenset(eid for eid, _, _ in edges if x[eid] == 1)
    k, mapped = _contracted(n_vertices, edges, forced)
    theta = {eid: math.log(float(x[eid])) for eid, _, _ in mapped}
    if not mapped:
        return Lambda(n_vertices, tuple(edges), x, theta, forced, eps_fit, 0.0, 0)

    target = {eid: float(x[eid]) for eid, _, _ in mapped}
    order = [eid for eid, _, _ in mapped]
    best = math.inf
    best_theta = dict(theta)
    step = 1.0
    iterations = 0
    f_cur = _dual_value(k, mapped, theta, target)
    mwu_cap = min(400, max_iters)
    for iterations in range(1, mwu_cap + 1):
        weights = {eid: math.exp(t) for eid, t in theta.items()}
        margins = _marginals_float(k, mapped, weights)
        dev = max(abs(margins[eid] - target[eid]) for eid in margins)
        if dev < best:
            best = dev
            best_theta = dict(theta)
        if dev <= eps_fit:
            break
        # multiplicative direction: scale lambda_e by (x_e / marginal_e)^step.
        # It is a descent direction for the max-entropy dual
        # f(theta) = log Z - x.theta, so Armijo backtracking converges even
        # when x sits on a face of the polytope (lambda diverges, f -> inf).
        logs = {eid: math.log(target[eid]) - math.log(max(margins[eid], 1e-300))
                for eid in order}
        slope = sum((margins[eid] - target[eid]) * logs[eid] for eid in order)
        if slope >= 0:
            break  # numerically converged
        step = min(step * 2.0, 64.0)
        accepted = False
        while step > 1e-8:
            trial = {eid: theta[eid] + step * logs[eid] for eid in order}
            f_new = _dual_value(k, mapped, trial, target)
            if f_new <= f_cur + 0.25 * step * slope:
                theta = trial
                f_cur = f_new
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        mean = sum(theta.values()) / len(theta)
        shift = sum(target[eid] for eid in order) * mean
        for eid in order:
            theta[eid] -= mean
        f_cur += shift - (k - 1) * mean  # dual value under renormalization
    if best > eps_fit:
        # targets on a face of the polytope make plain multiplicative
        # steps sublinear; polish with damped Newton on the same dual
        best_theta, best, extra = _newton_polish(
            k, mapped, best_theta, target, eps_fit, max_iters
        )
        iterations += extra
        if best > eps_fit and iterations < max_iters:
            # alternate once more from the polished point
            theta = dict(best_theta)
            weights = {eid: math.exp(t) for eid, t in theta.items()}
            margins = _marginals_float(k, mapped, weights)
            for _ in range(min(2000, max_iters - iterations)):
                iterations += 1
                logs = {eid: math.log(target[eid])
                        - math.log(max(margins[eid], 1e-300)) for eid in order}
                for eid in order:
                    theta[eid] += 0.5 * logs[eid]
                weights = {eid: math.exp(t) for eid, t in theta.items()}
                margins = _marginals_float(k, mapped, weights)
                dev = max(abs(margins[eid] - target[eid]) for eid in order)
                if dev < best:
                    best = dev
                    best_theta = dict(theta)
                if dev <= eps_fit:
                    break
            if best > eps_fit:
                best_theta, best, extra = _newton_polish(
                    k, mapped, best_theta, target, eps_fit, max_iters
                )
                iterations += extra
    if best > eps_fit:
        raise NoConvergence(
            f"lambda fit stopped at deviation {best:.3g} > {eps_fit}",
            best_deviation=best,
        )
    return Lambda(n_vertices, tuple(edges), x, best_theta, forced, eps_fit, best, iterations)


def _transfer_matrix(k, mapped, weights):
    """M = B^T L_r^{-1} B; marginals are w_e M_ee, covariances -w_e w_f M_ef^2."""
    L = np.zeros((k, k))
    for (eid, a, b) in mapped:
        w = weights[eid]
        L[a, a] += w
        L[b, b] += w
        L[a, b] -= w
        L[b, a] -= w
    B = np.zeros((k - 1, len(mapped)))
    for col, (eid, a, b) in enumerate(mapped):
        if a < k - 1:
            B[a, col] = 1.0
        if b < k - 1:
            B[b, col] -= 1.0
    X = np.linalg.solve(L[: k - 1, : k - 1], B)
    return B.T @ X


def _newton_polish(k, mapped, theta, target, eps_fit, max_iters):
    """Damped Newton on f(theta) = log Z - x.theta with exact Hessian."""
    order = [eid for eid, _, _ in mapped]
    th = np.array([theta[eid] for eid in order])
    tvec = np.array([target[eid] for eid in order])
    best = math.inf
    best_th = th.copy()
    rounds = 0
    for rounds in range(1, 200):
        th = th - th.mean()
        weights = {eid: math.exp(v) for eid, v in zip(order, th)}
        try:
            M = _transfer_matrix(k, mapped, weights)
        except np.linalg.LinAlgError as exc:
            raise SingularLaplacian(str(exc)) from exc
        wvec = np.array([weights[eid] for eid in order])
        mu = wvec * np.diag(M)
        dev = float(np.max(np.abs(mu - tvec)))
        if dev < best:
            best = dev
            best_th = th.copy()
        if dev <= eps_fit * 0.5:
            break
        H = -np.outer(wvec, wvec) * (M * M)
        np.fill_diagonal(H, mu * (1 - mu))
        improved = False
        for ridge in (1e-14, 1e-10, 1e-7, 1e-5):
            try:
                step = np.linalg.lstsq(H + ridge * np.eye(len(order)),
                                       tvec - mu, rcond=None)[0]
            except np.linalg.LinAlgError:
                continue
            scale = 1.0
            while scale > 1e-8:
                trial = th + scale * step
                tw = {eid: math.exp(v)
                      for eid, v in zip(order, trial - trial.mean())}
                try:
                    m2 = _marginals_float(k, mapped, tw)
                except SingularLaplacian:
                    scale *= 0.5
                    continue
                d2 = max(abs(m2[eid] - target[eid]) for eid in order)
                if d2 < dev * 0.999:
                    th = trial
                    improved = True
                    break
                scale *= 0.5
            if improved:
                break
        if not improved:
            break
    return ({eid: float(v) for eid, v in zip(order, best_th)}, best, rounds)


def _dual_value(k, mapped, theta, target):
    """Max-entropy dual: log Z(theta) - x.theta via the matrix-tree theorem."""
    L = np.zeros((k, k))
    for (eid, a, b) in mapped:
        w = math.exp(theta[eid])
        L[a, a] += w
        L[b, b] += w
        L[a, b] -= w
        L[b, a] -= w
    sign, logdet = np.linalg.slogdet(L[: k - 1, : k - 1])
    if sign <= 0:
        raise SingularLaplacian("non-positive spanning tree generating sum")
    return logdet - sum(target[eid] * theta[eid] for eid, _, _ in mapped)


def fit_lambda_support(support: SupportGraph, eps_fit: float = 1e-6,
                       max_iters: int = 20000) -> Lambda:
    edges = [(e.id, e.u, e.v) for e in support.edges]
    x = {e.id: e.x for e in support.edges}
    return fit_lambda(support.n_vertices, edges, x, eps_fit, max_iters)


def _quotient_graph(n_vertices, edges, forced_or_included, excluded):
    dsu = _DSU(n_vertices)
    for eid, u, v in edges:
        if eid in forced_or_included:
            dsu.union(u, v)
    roots = sorted({dsu.find(v) for v in range(n_vertices)})
    index = {r: i for i, r in enumerate(roots)}
    quotient = []
    for eid, u, v in edges:
        if eid in forced_or_included or eid in excluded:
            continue
        a, b = index[dsu.find(u)], index[dsu.find(v)]
        quotient.append((eid, a, b))
    return len(roots), quotient


def _is_bridge(k, quotient, eid):
    adj = {}
    for e, a, b in quotient:
        if e == eid:
            ends = (a, b)
            continue
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    a, b = ends
    if a == b:
        return False
    seen = {a}
    stack = [a]
    while stack:
        v = stack.pop()
        for w in adj.get(v, []):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return b not in seen


def sample_tree(lam: Lambda, rng, draw_index: int = 0, seed_info=()) -> TreeSample:
    """One exact draw from mu_lambda by sequential edge conditioning."""
    included = set(lam.forced)
    excluded = set()
    order = sorted(eid for eid, _, _ in lam.edges if eid not in lam.forced)
    for eid in order:
        k, quotient = _quotient_graph(lam.n_vertices, lam.edges, included, excluded)
        here = next(((e, a, b) for e, a, b in quotient if e == eid), None)
        if here is None:
            continue  # became a self-loop; conditional marginal 0
        _, a, b = here
        if a == b:
            excluded.add(eid)
            continue
        if _is_bridge(k, quotient, eid):
            included.add(eid)
            continue
        weights = {e: math.exp(lam.log_lambda[e]) for e, _, _ in quotient}
        margins = _marginals_float(k, quotient, weights)
        q = min(max(margins[eid], 0.0), 1.0)
        if rng.random() < q:
            included.add(eid)
        else:
            excluded.add(eid)
    if len(included) != lam.n_vertices - 1:
        raise SingularLaplacian(
            f"sampler produced {len(included)} edges, expected {lam.n_vertices - 1}"
        )
    return TreeSample(edges=frozenset(included), seed=tuple(seed_info), draw_index=draw_index)


def tree_parity_odd_vertices(support: SupportGraph, tree_edges) -> tuple:
    """Vertices with odd degree in T + e_0 (sorted)."""
    deg = [0] * support.n_vertices
    by_id = {e.id: e for e in support.edges}
    for eid in tree_edges:
        e = by_id[eid]
        deg[e.u] += 1
        deg[e.v] += 1
    deg[support.u0] += 1
    deg[support.v0] += 1
    return tuple(v for v in range(support.n_vertices) if deg[v] % 2 == 1)


def enumerate_spanning_trees(n_vertices: int, edges):
    """Brute-force tree enumeration for oracles; edges = [(id, u, v)]."""
    from itertools import combinations

    ids = [eid for eid, _, _ in edges]
    ends = {eid: (u, v) for eid, u, v in edges}
    for combo in combinations(ids, n_vertices - 1):
        dsu = _DSU(n_vertices)
        ok = True
        for eid in combo:
            if not dsu.union(*ends[eid]):
                ok = False
                break
        if ok:
            yield frozenset(combo)


def exact_tree_probabilities(n_vertices: int, edges, weights: dict):
    """Exact mu_lambda over all spanning trees; weights may be Fractions."""
    probs = {}
    for tree in enumerate_spanning_trees(n_vertices, edges):
        w = Fraction(1)
        for eid in tree:
            w *= Fraction(weights[eid])
        probs[tree] = w
    total = sum(probs.values())
    return {t: w / total for t, w in probs.items()}
