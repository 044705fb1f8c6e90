"""Compiled per-epoch kernels shared by the public operations and the simulator loop.

Everything here works on plain arrays so that :mod:`numba` can compile it.
The public wrappers in :mod:`tsfuzz.netstate` and :mod:`tsfuzz.policies`
call these same functions, so a decision taken through the API and one taken
inside :func:`run_epochs` follow identical arithmetic.
"""

import math

import numpy as np
from numba import njit

A3, UTILITY, LOAD_AWARE, RANDOM, QLEARNING = range(5)

SINR_NORM_LO_DB = -10.0
SINR_NORM_HI_DB = 30.0
RATE_CAP_SINR = 1000.0  # 30 dB
RSRP_EDGES = np.array([-100.0, -90.0, -80.0])
SINR_EDGES_DB = np.array([0.0, 10.0, 20.0])
LOAD_EDGES = np.array([0.4, 0.8])
N_Q_STATES = 4 * 4 * 3

# params vector layout for run_epochs
P_HYST, P_TTT, P_W_SINR, P_W_LOAD, P_W_RATE, P_LA_SINR, P_LA_LOAD, P_ETA, P_GAMMA, P_R1, P_R2, P_R3 = range(12)
N_PARAMS = 12


@njit(cache=True)
def to_db(x):
    if x <= 0.0:
        return -np.inf
    return 10.0 * math.log10(x)


# -- mobility -----------------------------------------------------------------------

@njit(cache=True)
def advance(pos, waypoint, speed, pool_wp, pool_speed, pointer, dt, box):
    """One random-waypoint step; mutates waypoint/speed/pointer, returns new positions."""
    n = pos.shape[0]
    depth = pool_wp.shape[0]
    out = np.empty_like(pos)
    for u in range(n):
        dx = waypoint[u, 0] - pos[u, 0]
        dy = waypoint[u, 1] - pos[u, 1]
        dist = math.sqrt(dx * dx + dy * dy)
        step = speed[u] * dt
        if dist <= step:
            out[u, 0] = waypoint[u, 0]
            out[u, 1] = waypoint[u, 1]
            pointer[u] += 1
            j = pointer[u] % depth
            waypoint[u, 0] = pool_wp[j, u, 0]
            waypoint[u, 1] = pool_wp[j, u, 1]
            speed[u] = pool_speed[j, u]
        else:
            f = step / dist
            out[u, 0] = min(max(pos[u, 0] + dx * f, 0.0), box)
            out[u, 1] = min(max(pos[u, 1] + dy * f, 0.0), box)
    return out


@njit(cache=True)
def trajectory(pos0, waypoint, speed, pool_wp, pool_speed, pointer, dt, box, n_steps):
    out = np.empty((n_steps + 1, pos0.shape[0], 2))
    out[0] = pos0
    for k in range(1, n_steps + 1):
        out[k] = advance(out[k - 1], waypoint, speed, pool_wp, pool_speed, pointer, dt, box)
    return out


# -- load / throughput ------------------------------------------------------------------

@njit(cache=True)
def cell_loads(serving, n_cells, n_max, background):
    counts = np.zeros(n_cells)
    for u in range(serving.shape[0]):
        counts[serving[u]] += 1.0
    loads = np.empty(n_cells)
    for c in range(n_cells):
        loads[c] = min(1.0, counts[c] / n_max + background[c])
    return loads


@njit(cache=True)
def served_throughput(sinr, serving, bandwidth, n_cells):
    n = serving.shape[0]
    counts = np.zeros(n_cells)
    for u in range(n):
        counts[serving[u]] += 1.0
    thr = np.empty(n)
    for u in range(n):
        thr[u] = bandwidth * math.log2(1.0 + sinr[u, serving[u]]) / counts[serving[u]]
    return thr


@njit(cache=True)
def jain(x):
    s = 0.0
    sq = 0.0
    for v in x:
        s += v
        sq += v * v
    if sq == 0.0:
        return 1.0
    return s * s / (x.shape[0] * sq)


# -- decision rules ----------------------------------------------------------------

@njit(cache=True)
def a3_decide(rsrp, active, serving, timers, hyst, ttt, dt_ms):
    n, m = rsrp.shape
    targets = serving.copy()
    new_timers = np.zeros(n)
    for u in range(n):
        s = serving[u]
        best = -1
        best_v = -np.inf
        for c in range(m):
            if active[c] and c != s and rsrp[u, c] > best_v:
                best_v = rsrp[u, c]
                best = c
        if best >= 0 and best_v > rsrp[u, s] + hyst:
            t = timers[u] + dt_ms
            if t >= ttt:
                targets[u] = best
            else:
                new_timers[u] = t
    return targets, new_timers


@njit(cache=True)
def norm_sinr(sinr):
    v = (to_db(sinr) - SINR_NORM_LO_DB) / (SINR_NORM_HI_DB - SINR_NORM_LO_DB)
    return min(1.0, max(0.0, v))


@njit(cache=True)
def norm_rate(sinr):
    v = math.log2(1.0 + sinr) / math.log2(1.0 + RATE_CAP_SINR)
    return min(1.0, max(0.0, v))


@njit(cache=True)
def utility(nsinr, load, nrate, w_sinr, w_load, w_rate):
    return w_sinr * nsinr + w_load * (1.0 - load) + w_rate * nrate


@njit(cache=True)
def utility_decide(sinr, loads, active, w_sinr, w_load, w_rate):
    n, m = sinr.shape
    targets = np.empty(n, dtype=np.int64)
    for u in range(n):
        best = -1
        best_v = -np.inf
        for c in range(m):
            if not active[c]:
                continue
            v = utility(norm_sinr(sinr[u, c]), loads[c], norm_rate(sinr[u, c]), w_sinr, w_load, w_rate)
            if v > best_v:
                best_v = v
                best = c
        targets[u] = best
    return targets


@njit(cache=True)
def load_aware_decide(sinr, loads, active, min_sinr_db, max_load):
    n, m = sinr.shape
    targets = np.empty(n, dtype=np.int64)
    for u in range(n):
        best = -1
        best_load = np.inf
        best_sinr = -np.inf
        fallback = -1
        fallback_sinr = -np.inf
        for c in range(m):
            if not active[c]:
                continue
            x = sinr[u, c]
            if x > fallback_sinr:
                fallback_sinr = x
                fallback = c
            if to_db(x) >= min_sinr_db and loads[c] <= max_load:
                if loads[c] < best_load or (loads[c] == best_load and x > best_sinr):
                    best = c
                    best_load = loads[c]
                    best_sinr = x
        targets[u] = best if best >= 0 else fallback
    return targets


# -- tabular Q-learning --------------------------------------------------------------

@njit(cache=True)
def _bin(x, edges):
    k = 0
    for e in edges:
        if x >= e:
            k += 1
    return k


@njit(cache=True)
def q_keys(rsrp, sinr, loads, serving):
    n = serving.shape[0]
    keys = np.empty(n, dtype=np.int64)
    for u in range(n):
        s = serving[u]
        r = _bin(rsrp[u, s], RSRP_EDGES)
        q = _bin(to_db(sinr[u, s]), SINR_EDGES_DB)
        ld = _bin(loads[s], LOAD_EDGES)
        keys[u] = (r * 4 + q) * 3 + ld
    return keys


@njit(cache=True)
def q_greedy(qvals, keys, active, serving, explore, random_cells):
    n = serving.shape[0]
    m = qvals.shape[1]
    targets = np.empty(n, dtype=np.int64)
    for u in range(n):
        if explore[u]:
            targets[u] = random_cells[u]
            continue
        row = qvals[keys[u]]
        best = -1
        best_v = -np.inf
        for c in range(m):
            if active[c] and row[c] > best_v:
                best_v = row[c]
                best = c
        if active[serving[u]] and row[serving[u]] == best_v:
            best = serving[u]
        targets[u] = best
    return targets


@njit(cache=True)
def q_update(qvals, visits, s, a, r, s_next, eta, gamma):
    target = r + gamma * np.max(qvals[s_next])
    qvals[s, a] = (1.0 - eta) * qvals[s, a] + eta * target
    visits[s, a] += 1


@njit(cache=True)
def q_rewards(thr, fairness, moved, w1, w2, w3, bandwidth):
    scale = bandwidth * math.log2(1.0 + RATE_CAP_SINR)
    n = thr.shape[0]
    r = np.empty(n)
    for u in range(n):
        t = min(1.0, max(0.0, thr[u] / scale))
        r[u] = w1 * t + w2 * fairness - w3 * (1.0 if moved[u] else 0.0)
    return r


# -- simulator loop ---------------------------------------------------------------

@njit(cache=True)
def run_epochs(kind, rsrp, sinr, active, background, n_max, serving0, params,
               explore, random_cells, bandwidth, dt_ms):
    """Drive one policy over epochs 1..T on precomputed channel matrices.

    ``rsrp`` and ``sinr`` are (T+1, N, M) with index 0 the initial state.
    Returns the serving cell and shared throughput of every UE after each
    epoch's decision, both (T, N).
    """
    n_steps = rsrp.shape[0] - 1
    n, m = rsrp.shape[1], rsrp.shape[2]
    serving = serving0.copy()
    serving_log = np.empty((n_steps, n), dtype=np.int64)
    thr_log = np.empty((n_steps, n))
    timers = np.zeros(n)
    qvals = np.zeros((N_Q_STATES, m))
    visits = np.zeros((N_Q_STATES, m), dtype=np.int64)
    loads = cell_loads(serving, m, n_max, background)
    for k in range(1, n_steps + 1):
        r_k = rsrp[k]
        s_k = sinr[k]
        if kind == A3:
            targets, timers = a3_decide(r_k, active, serving, timers, params[P_HYST], params[P_TTT], dt_ms)
        elif kind == UTILITY:
            targets = utility_decide(s_k, loads, active, params[P_W_SINR], params[P_W_LOAD], params[P_W_RATE])
        elif kind == LOAD_AWARE:
            targets = load_aware_decide(s_k, loads, active, params[P_LA_SINR], params[P_LA_LOAD])
        elif kind == RANDOM:
            targets = random_cells[k - 1].copy()
        else:
            keys = q_keys(r_k, s_k, loads, serving)
            targets = q_greedy(qvals, keys, active, serving, explore[k - 1], random_cells[k - 1])
        new_loads = cell_loads(targets, m, n_max, background)
        thr = served_throughput(s_k, targets, bandwidth, m)
        if kind == QLEARNING:
            moved = targets != serving
            rewards = q_rewards(thr, jain(thr), moved, params[P_R1], params[P_R2], params[P_R3], bandwidth)
            next_keys = q_keys(r_k, s_k, new_loads, targets)
            for u in range(n):
                q_update(qvals, visits, keys[u], targets[u], rewards[u], next_keys[u],
                         params[P_ETA], params[P_GAMMA])
        serving = targets
        loads = new_loads
        serving_log[k - 1] = serving
        thr_log[k - 1] = thr
    return serving_log, thr_log
