# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the pure-Python run loop in forksim.runner.

Consumes the same PCG64 stream with the same draw order and the same float
arithmetic, so results are bit-identical with the fallback (enforced by the
parity test suite).  Keep every formula in lockstep with runner.py,
automata.py and frp.py when editing either side.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

import numpy as np

from .attacker import Strategy
from .defense import Policy, WindowRecord
from .runner import RunResult

DEF N_ACTIONS = 3

cdef double[10] W_COEFF
W_COEFF[0] = 1.0; W_COEFF[1] = 0.95; W_COEFF[2] = 0.9; W_COEFF[3] = 0.85
W_COEFF[4] = 0.8; W_COEFF[5] = 0.75; W_COEFF[6] = 0.7; W_COEFF[7] = 0.65
W_COEFF[8] = 0.6; W_COEFF[9] = 0.55

cdef double OVERFLOW = 0.5

# Action indices, matching forksim.automata.
cdef int GROW = 0, STOP = 1, SHRINK = 2
cdef int INCREASE = 0, NO_CHANGE = 1, DECREASE = 2

_SM_NAMES = ("grow", "stop", "shrink")
_DS_NAMES = ("increase", "nochange", "decrease")


cdef inline double next_double(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


# ---------------------------------------------------------------------------
# Learning automaton (linear reward-penalty), twin of automata.LinearRewardPenalty

cdef struct Automaton:
    int is_depth          # 1: VDHLA-style depth automaton, 0: linear L_RP
    double p[N_ACTIONS]
    double reward_step
    double penalty_step
    int current
    int memory
    int limit
    int initial_depth
    int depth_cap
    int initial_action
    int last_action


cdef inline void la_reset(Automaton *la) noexcept nogil:
    cdef int j
    for j in range(N_ACTIONS):
        la.p[j] = 1.0 / N_ACTIONS
    la.current = la.initial_action
    la.memory = 1
    la.limit = la.initial_depth
    la.last_action = -1


cdef inline int la_choose(Automaton *la, int *allowed, int n_allowed,
                          bitgen_t *rng) noexcept nogil:
    cdef double total = 0.0
    cdef double u, acc
    cdef int i, j, chosen, present
    if la.is_depth:
        u = next_double(rng)
        present = 0
        for i in range(n_allowed):
            if allowed[i] == la.current:
                present = 1
                break
        if not present:
            la.current = allowed[<int> (u * n_allowed)]
            la.memory = 1
        la.last_action = la.current
        return la.current
    for i in range(n_allowed):
        total += la.p[allowed[i]]
    u = next_double(rng) * total
    acc = 0.0
    chosen = allowed[n_allowed - 1]
    for i in range(n_allowed):
        j = allowed[i]
        acc += la.p[j]
        if u < acc:
            chosen = j
            break
    la.last_action = chosen
    return chosen


cdef inline void la_update(Automaton *la, int beta) noexcept nogil:
    cdef int i = la.last_action
    cdef int j
    cdef double a, b, spread, total
    if la.is_depth:
        if beta == 1:
            if la.memory < la.limit:
                la.memory += 1
            else:
                la.limit = la.limit + 1 if la.limit + 1 < la.depth_cap else la.depth_cap
                la.memory = la.limit
        else:
            la.memory -= 1
            if la.memory <= 0:
                la.current = (la.current + 1) % N_ACTIONS
                la.limit = la.limit - 1 if la.limit > 1 else 1
                la.memory = 1
        return
    if beta == 1:
        a = la.reward_step
        for j in range(N_ACTIONS):
            if j == i:
                la.p[j] = la.p[j] + a * (1.0 - la.p[j])
            else:
                la.p[j] = (1.0 - a) * la.p[j]
    else:
        b = la.penalty_step
        spread = b / (N_ACTIONS - 1)
        for j in range(N_ACTIONS):
            if j == i:
                la.p[j] = (1.0 - b) * la.p[j]
            else:
                la.p[j] = spread + (1.0 - b) * la.p[j]
    total = la.p[0]
    for j in range(1, N_ACTIONS):
        total += la.p[j]
    for j in range(N_ACTIONS):
        la.p[j] /= total


# ---------------------------------------------------------------------------
# Two-chain fork selection, twin of forksim.frp (public chain is index 0)

cdef struct ForkEval:
    int winner        # 0 public, 1 attacker
    int weight_used   # 1 when the weight criterion decided


cdef inline void _two_chain_scores(double *pub_ts, int pub_len,
                                   double *att_ts, int att_len,
                                   double *w0, double *w1,
                                   int *v0, int *v1) noexcept nogil:
    cdef int max_len = pub_len if pub_len > att_len else att_len
    cdef int heights = max_len if max_len < 10 else 10
    cdef int i, winner
    w0[0] = 0.0; w1[0] = 0.0
    v0[0] = 0; v1[0] = 0
    for i in range(heights):
        if i < pub_len and i < att_len:
            # Equal stamps never occur; the lower index would win if they did.
            winner = 1 if att_ts[i] > pub_ts[i] else 0
        elif i < pub_len:
            winner = 0
        else:
            winner = 1
        if winner == 0:
            w0[0] += W_COEFF[i]
            v0[0] += 1
        else:
            w1[0] += W_COEFF[i]
            v1[0] += 1
    if pub_len > 10:
        w0[0] += (pub_len - 10) * OVERFLOW
    if att_len > 10:
        w1[0] += (att_len - 10) * OVERFLOW


cdef inline int _heavier(double w0, double w1, int pub_len, int att_len) noexcept nogil:
    # Weight ties fall to the longer chain, then the lower index.
    if w1 > w0 or (w1 == w0 and att_len > pub_len):
        return 1
    return 0


cdef ForkEval select_two_chains(int is_sdtla, int k, int inclusive,
                                double *pub_ts, int pub_len,
                                double *att_ts, int att_len) noexcept nogil:
    cdef ForkEval out
    cdef double w0, w1
    cdef int v0, v1, first, first_len, second_len, gap, capped, threshold, decides
    first = 0 if pub_len >= att_len else 1
    first_len = pub_len if first == 0 else att_len
    second_len = att_len if first == 0 else pub_len
    gap = first_len - second_len
    if is_sdtla:
        decides = (gap >= k) if inclusive else (gap > k)
        if decides:
            out.winner = first
            out.weight_used = 0
            return out
        _two_chain_scores(pub_ts, pub_len, att_ts, att_len, &w0, &w1, &v0, &v1)
        out.winner = _heavier(w0, w1, pub_len, att_len)
        out.weight_used = 1
        return out
    # WVBM: validated strict-longest wins by length, otherwise weight.
    _two_chain_scores(pub_ts, pub_len, att_ts, att_len, &w0, &w1, &v0, &v1)
    if gap > 0:
        capped = first_len if first_len < 10 else 10
        threshold = (capped + 3) // 4
        if (v0 if first == 0 else v1) >= threshold:
            out.winner = first
            out.weight_used = 0
            return out
    out.winner = _heavier(w0, w1, pub_len, att_len)
    out.weight_used = 1
    return out


cdef int resolve_pending(double *main_ts, int base, int pub_len, tuple branch_ts,
                         int is_sdtla, int k_param, int inclusive) except -1:
    """Evaluate an abandoned published branch against the current main chain.

    Returns 1 when the weight criterion decided; the branch itself always
    loses (it is one or more stale tie blocks against a longer, newer
    segment), so the caller just tallies its length as stale.
    """
    cdef int n_branch = len(branch_ts)
    cdef double stack_ts[16]
    cdef double *branch = stack_ts
    cdef double *heap = NULL
    cdef int j
    cdef ForkEval ev
    if n_branch > 16:
        heap = <double *> malloc(n_branch * sizeof(double))
        if heap == NULL:
            raise MemoryError()
        branch = heap
    try:
        for j in range(n_branch):
            branch[j] = <double> branch_ts[j]
        ev = select_two_chains(is_sdtla, k_param, inclusive,
                               main_ts + base, pub_len, branch, n_branch)
        return ev.weight_used
    finally:
        if heap != NULL:
            free(heap)


# ---------------------------------------------------------------------------
# The run loop


def simulate_run_native(config):
    """Drop-in replacement for runner.simulate_run_python."""
    policy = config.policy
    defense_cfg = config.resolved_defense()
    strategy = config.resolved_strategy()

    cdef int blocks = config.blocks
    cdef double alpha = config.alpha
    cdef double gamma = config.gamma
    cdef double mean_interval = config.mean_block_interval
    cdef int is_defended = 1 if policy in (Policy.SDTLA, Policy.WVBM) else 0
    cdef int is_sdtla = 1 if policy is Policy.SDTLA else 0
    cdef int is_uniform = 1 if policy is Policy.UNIFORM else 0
    cdef int is_modified = 1 if strategy is Strategy.MODIFIED_SM1 else 0
    cdef int modified_inclusive = 1 if config.modified_inclusive else 0
    cdef int sdtla_inclusive = 1 if defense_cfg.sdtla_inclusive_k else 0

    cdef int tau_blocks = defense_cfg.tau_blocks
    cdef int window_taus = defense_cfg.window_taus
    cdef int k_min = defense_cfg.k_min, k_max = defense_cfg.k_max
    cdef int z_min = defense_cfg.z_min, z_max = defense_cfg.z_max
    cdef int k_init = defense_cfg.k_initial, z_init = defense_cfg.z_initial
    cdef int fixed_nrc = defense_cfg.fixed_nrc
    cdef int reset_period = defense_cfg.reset_period_windows or 0
    cdef double reward_step = defense_cfg.reward_step
    cdef double penalty_step = defense_cfg.penalty_step

    bit_generator = np.random.PCG64(np.random.SeedSequence(config.seed))
    capsule = bit_generator.capsule
    cdef bitgen_t *rng = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef double *main_ts = <double *> malloc(blocks * sizeof(double))
    cdef char *main_miner = <char *> malloc(blocks * sizeof(char))
    cdef double *att_ts = <double *> malloc(blocks * sizeof(double))
    if main_ts == NULL or main_miner == NULL or att_ts == NULL:
        free(main_ts); free(main_miner); free(att_ts)
        raise MemoryError()

    cdef int main_len = 0
    # Active race; race_active mirrors runner's `race is not None`.
    cdef int race_active = 0
    cdef int race_base = 0, att_len = 0, published = 0, stale_counted = 0
    # Attacker state machine.
    cdef int a_private = 0, a_public = 0, a_published = 0, a_pbl = 0, a_ds = 0
    cdef int known_k = -1
    # Defense controller state.
    cdef int is_depth = 0 if defense_cfg.automaton == "lrp" else 1
    cdef Automaton la_k, la_z
    la_k.is_depth = is_depth
    la_k.reward_step = reward_step; la_k.penalty_step = penalty_step
    la_k.initial_depth = defense_cfg.initial_depth
    la_k.depth_cap = defense_cfg.depth_cap
    la_k.initial_action = 0 if is_depth else -1
    la_z = la_k
    la_reset(&la_k); la_reset(&la_z)
    cdef int k_param = k_init, z_param = z_init
    cdef int win_stale = 0, win_wd = 0, win_hd = 0
    cdef double prev_rate_k = 0.0, prev_rate_z = 0.0
    cdef int has_prev = 0, window_index = 0, windows_since_reset = 0
    cdef long long total_wd = 0, total_hd = 0, total_stale = 0
    cdef long long sum_z = 0, sum_k = 0
    # Baseline state.
    cdef int tie_pending = 0
    cdef double gamma_eff = 0.5 if is_uniform else gamma
    cdef long long height_decisions_bl = 0, stale_total_bl = 0

    pendings = []   # (base, ts tuple) of abandoned published branches
    trace = []

    cdef int i, index, miner, lead_before, pre_lead, pub_len, hidden, j, stale_now
    cdef double t = 0.0, u, dt
    cdef int hint, action, weight_used
    cdef ForkEval ev
    cdef int allowed[N_ACTIONS]
    cdef int n_allowed, act_k, act_z, beta_k, beta_z, decisions, have_update
    cdef double rate_z_new, rate_k_new, beta1, beta2, sbcr_val, rate_sum
    cdef int selfish_wins, base_c, n_branch

    if is_sdtla:
        known_k = k_param

    try:
        for i in range(blocks):
            if is_defended:
                sum_z += z_param
                sum_k += k_param
            else:
                sum_z += fixed_nrc
            index = i + 1
            u = next_double(rng)
            miner = 1 if u < alpha else 0
            dt = -log(1.0 - next_double(rng)) * mean_interval
            t += dt

            if is_defended:
                # ------------- defended event handling -------------
                if miner == 1:
                    if not race_active:
                        race_active = 1
                        race_base = main_len
                        att_len = 0
                        published = 0
                        stale_counted = 0
                    att_ts[att_len] = t
                    att_len += 1
                    hint = 0
                    if is_modified and known_k < 0 and not is_sdtla:
                        # WVBM-aware release: would the full branch win now?
                        pub_len = main_len - race_base
                        if pub_len == 0:
                            hint = 1
                        else:
                            ev = select_two_chains(is_sdtla, k_param, sdtla_inclusive,
                                                   main_ts + race_base, pub_len,
                                                   att_ts, att_len)
                            hint = 1 if ev.winner == 1 else 0
                    # attacker.on_selfish_block
                    lead_before = a_private - a_public
                    a_private += 1
                    a_pbl += 1
                    action = 0
                    if lead_before == 0 and a_pbl == 2:
                        a_published = a_private; a_pbl = 0; action = 1
                    elif is_modified and known_k >= 0 and (
                            (a_private - a_public >= known_k) if modified_inclusive
                            else (a_private - a_public > known_k)):
                        a_published = a_private; a_pbl = 0; action = 1
                    elif is_modified and known_k < 0 and hint:
                        a_published = a_private; a_pbl = 0; action = 1
                    if action == 1:
                        # handle_publication
                        published = a_published
                        pub_len = main_len - race_base
                        if pub_len == 0:
                            # no competitor: the branch extends the main chain
                            for j in range(published):
                                main_ts[main_len] = att_ts[j]
                                main_miner[main_len] = 1
                                main_len += 1
                            hidden = a_private - a_published
                            a_private = hidden; a_public = 0; a_published = 0
                            a_pbl = hidden
                            if hidden > 0:
                                for j in range(hidden):
                                    att_ts[j] = att_ts[published + j]
                                att_len = hidden
                                race_base = main_len
                                published = 0
                                stale_counted = 0
                            else:
                                race_active = 0
                        elif published > pub_len:
                            # strict overtake: resolve at receipt
                            ev = select_two_chains(is_sdtla, k_param, sdtla_inclusive,
                                                   main_ts + race_base, pub_len,
                                                   att_ts, published)
                            if ev.weight_used:
                                win_wd += 1; total_wd += 1
                            else:
                                win_hd += 1; total_hd += 1
                            if ev.winner == 1:
                                win_stale += pub_len; total_stale += pub_len
                                win_stale -= stale_counted; total_stale -= stale_counted
                                main_len = race_base
                                for j in range(published):
                                    main_ts[main_len] = att_ts[j]
                                    main_miner[main_len] = 1
                                    main_len += 1
                                hidden = a_private - a_published
                                a_private = hidden; a_public = 0; a_published = 0
                                a_pbl = hidden
                                if hidden > 0:
                                    for j in range(hidden):
                                        att_ts[j] = att_ts[published + j]
                                    att_len = hidden
                                    race_base = main_len
                                    published = 0
                                    stale_counted = 0
                                else:
                                    race_active = 0
                            else:
                                stale_now = published - stale_counted
                                win_stale += stale_now; total_stale += stale_now
                                stale_counted = published
                                if a_private - a_published == 0:
                                    a_private = 0; a_public = 0; a_published = 0
                                    a_pbl = 0
                                    race_active = 0
                else:
                    main_ts[main_len] = t
                    main_miner[main_len] = 0
                    main_len += 1
                    if race_active:
                        # attacker.on_honest_block
                        lead_before = a_private - a_public
                        a_public += 1
                        if lead_before == 0:
                            if published > 0:
                                pendings.append(
                                    (race_base,
                                     tuple([att_ts[j] for j in range(published)])))
                            a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                            race_active = 0
                        elif lead_before == 1:
                            # publish through the last block: a visible tie
                            a_published = a_private
                            published = a_published
                        elif lead_before == 2:
                            a_published = a_private; a_pbl = 0
                            if a_public >= z_param:
                                a_ds += 1
                            published = a_published
                            pub_len = main_len - race_base
                            ev = select_two_chains(is_sdtla, k_param, sdtla_inclusive,
                                                   main_ts + race_base, pub_len,
                                                   att_ts, published)
                            if ev.weight_used:
                                win_wd += 1; total_wd += 1
                            else:
                                win_hd += 1; total_hd += 1
                            if ev.winner == 1:
                                win_stale += pub_len; total_stale += pub_len
                                win_stale -= stale_counted; total_stale -= stale_counted
                                main_len = race_base
                                for j in range(published):
                                    main_ts[main_len] = att_ts[j]
                                    main_miner[main_len] = 1
                                    main_len += 1
                                a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                                race_active = 0
                            else:
                                stale_now = published - stale_counted
                                win_stale += stale_now; total_stale += stale_now
                                stale_counted = published
                                a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                                race_active = 0
                        else:
                            a_published += 1
                            published = a_published
                if known_k >= 0:
                    known_k = k_param
                if index % tau_blocks == 0:
                    # ---- tau: resolve pendings, then the live visible fork
                    if pendings:
                        pendings_ref = pendings
                        pendings = []
                        for base_obj, ts_obj in pendings_ref:
                            base_c = <int> base_obj
                            n_branch = len(<tuple> ts_obj)
                            weight_used = resolve_pending(
                                main_ts, base_c, main_len - base_c, <tuple> ts_obj,
                                is_sdtla, k_param, sdtla_inclusive)
                            if weight_used:
                                win_wd += 1; total_wd += 1
                            else:
                                win_hd += 1; total_hd += 1
                            win_stale += n_branch; total_stale += n_branch
                    if race_active and published > 0:
                        pub_len = main_len - race_base
                        ev = select_two_chains(is_sdtla, k_param, sdtla_inclusive,
                                               main_ts + race_base, pub_len,
                                               att_ts, published)
                        if ev.weight_used:
                            win_wd += 1; total_wd += 1
                        else:
                            win_hd += 1; total_hd += 1
                        if ev.winner == 1:
                            win_stale += pub_len; total_stale += pub_len
                            win_stale -= stale_counted; total_stale -= stale_counted
                            main_len = race_base
                            for j in range(published):
                                main_ts[main_len] = att_ts[j]
                                main_miner[main_len] = 1
                                main_len += 1
                            hidden = a_private - a_published
                            a_private = hidden; a_public = 0; a_published = 0
                            a_pbl = hidden
                            if hidden > 0:
                                for j in range(hidden):
                                    att_ts[j] = att_ts[published + j]
                                att_len = hidden
                                race_base = main_len
                                published = 0
                                stale_counted = 0
                            else:
                                race_active = 0
                        else:
                            stale_now = published - stale_counted
                            win_stale += stale_now; total_stale += stale_now
                            stale_counted = published
                            if a_private - a_published == 0:
                                a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                                race_active = 0
                    if (index // tau_blocks) % window_taus == 0:
                        # ---- time window close
                        stale_now = win_stale if win_stale > 0 else 0
                        rate_z_new = (<double> stale_now) / (<double> z_param)
                        rate_k_new = ((<double> stale_now) / (<double> k_param)
                                      if is_sdtla else 0.0)
                        have_update = has_prev
                        beta1 = 0.0; beta2 = 0.0
                        beta_k = -1; beta_z = -1
                        if have_update:
                            rate_sum = rate_z_new + prev_rate_z
                            beta_z = 1 if (rate_sum > 0.0
                                           and prev_rate_z / rate_sum > 0.5) else 0
                            la_update(&la_z, beta_z)
                            if is_sdtla:
                                decisions = win_wd + win_hd
                                beta1 = ((<double> win_wd) / (<double> decisions)
                                         if decisions > 0 else 0.0)
                                rate_sum = rate_k_new + prev_rate_k
                                beta2 = (prev_rate_k / rate_sum
                                         if rate_sum > 0.0 else 0.0)
                                beta_k = 1 if (beta1 > 0.5 and beta2 > 0.5) else 0
                                la_update(&la_k, beta_k)
                        act_k = -1
                        if is_sdtla:
                            if k_param >= k_max:
                                allowed[0] = STOP; allowed[1] = SHRINK; n_allowed = 2
                            elif k_param <= k_min:
                                allowed[0] = GROW; allowed[1] = STOP; n_allowed = 2
                            else:
                                allowed[0] = GROW; allowed[1] = STOP
                                allowed[2] = SHRINK; n_allowed = 3
                            act_k = la_choose(&la_k, allowed, n_allowed, rng)
                            if act_k == GROW:
                                k_param += 1
                            elif act_k == SHRINK:
                                k_param -= 1
                            if k_param < k_min:
                                k_param = k_min
                            if k_param > k_max:
                                k_param = k_max
                        rate_sum = rate_z_new + prev_rate_z
                        sbcr_val = rate_z_new / rate_sum if rate_sum > 0.0 else 0.5
                        if z_param >= z_max:
                            allowed[0] = NO_CHANGE; allowed[1] = DECREASE; n_allowed = 2
                        elif z_param <= z_min:
                            allowed[0] = INCREASE; allowed[1] = NO_CHANGE; n_allowed = 2
                        else:
                            allowed[0] = INCREASE; allowed[1] = NO_CHANGE
                            allowed[2] = DECREASE; n_allowed = 3
                        act_z = la_choose(&la_z, allowed, n_allowed, rng)
                        if act_z == INCREASE:
                            if sbcr_val >= 0.75 and z_param <= z_max:
                                z_param *= 2
                            else:
                                z_param += 2
                        elif act_z == DECREASE:
                            if z_param > 6 and z_param % 2 == 0:
                                z_param //= 2
                            elif z_param > z_min:
                                z_param -= 2
                        if z_param < z_min:
                            z_param = z_min
                        if z_param > z_max:
                            z_param = z_max
                        trace.append(WindowRecord(
                            window_index=window_index,
                            k=k_param if is_sdtla else None,
                            z=z_param,
                            rate_per_k=rate_k_new if is_sdtla else None,
                            rate_per_z=rate_z_new,
                            beta1=beta1 if (have_update and is_sdtla) else None,
                            beta2=beta2 if (have_update and is_sdtla) else None,
                            beta_k=(beta_k if beta_k >= 0 else None),
                            beta_z=(beta_z if beta_z >= 0 else None),
                            action_k=_SM_NAMES[act_k] if is_sdtla else None,
                            action_z=_DS_NAMES[act_z],
                            weight_decisions=win_wd,
                            height_decisions=win_hd,
                            fork_stale_blocks=win_stale,
                        ))
                        prev_rate_k = rate_k_new
                        prev_rate_z = rate_z_new
                        has_prev = 1
                        win_stale = 0; win_wd = 0; win_hd = 0
                        window_index += 1
                        windows_since_reset += 1
                        if reset_period and windows_since_reset >= reset_period:
                            la_reset(&la_k); la_reset(&la_z)
                            k_param = k_init; z_param = z_init
                            has_prev = 0
                            prev_rate_k = 0.0; prev_rate_z = 0.0
                            windows_since_reset = 0
                        if known_k >= 0:
                            known_k = k_param
            else:
                # ------------- baseline event handling -------------
                if miner == 1:
                    if not race_active:
                        race_active = 1
                        race_base = main_len
                        att_len = 0
                    att_ts[att_len] = t
                    att_len += 1
                    lead_before = a_private - a_public
                    a_private += 1
                    a_pbl += 1
                    if lead_before == 0 and a_pbl == 2:
                        # tie won by the pool's own block
                        a_published = a_private; a_pbl = 0
                        stale_total_bl += main_len - race_base
                        main_len = race_base
                        for j in range(att_len):
                            main_ts[main_len] = att_ts[j]
                            main_miner[main_len] = 1
                            main_len += 1
                        height_decisions_bl += 1
                        a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                        race_active = 0
                        tie_pending = 0
                else:
                    if tie_pending:
                        u = next_double(rng)
                        if u < gamma_eff:
                            # honest hash extends the selfish tip
                            stale_total_bl += main_len - race_base
                            main_len = race_base
                            for j in range(att_len):
                                main_ts[main_len] = att_ts[j]
                                main_miner[main_len] = 1
                                main_len += 1
                            main_ts[main_len] = t
                            main_miner[main_len] = 0
                            main_len += 1
                            height_decisions_bl += 1
                            a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                            race_active = 0
                            tie_pending = 0
                        else:
                            main_ts[main_len] = t
                            main_miner[main_len] = 0
                            main_len += 1
                            a_public += 1  # lead 0: adopt
                            stale_total_bl += a_published
                            height_decisions_bl += 1
                            a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                            race_active = 0
                            tie_pending = 0
                    else:
                        main_ts[main_len] = t
                        main_miner[main_len] = 0
                        main_len += 1
                        if race_active:
                            pre_lead = a_private - a_public
                            a_public += 1
                            if pre_lead == 0:
                                stale_total_bl += a_published
                                height_decisions_bl += 1
                                a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                                race_active = 0
                            elif pre_lead == 1:
                                a_published = a_private
                                tie_pending = 1
                            elif pre_lead == 2:
                                a_published = a_private; a_pbl = 0
                                if a_public >= fixed_nrc:
                                    a_ds += 1
                                stale_total_bl += main_len - race_base
                                main_len = race_base
                                for j in range(att_len):
                                    main_ts[main_len] = att_ts[j]
                                    main_miner[main_len] = 1
                                    main_len += 1
                                height_decisions_bl += 1
                                a_private = 0; a_public = 0; a_published = 0; a_pbl = 0
                                race_active = 0
                            else:
                                a_published += 1

        # ---------------------- run end settlement ----------------------
        hidden = a_private - a_published
        if is_defended:
            if pendings:
                pendings_ref = pendings
                pendings = []
                for base_obj, ts_obj in pendings_ref:
                    base_c = <int> base_obj
                    n_branch = len(<tuple> ts_obj)
                    weight_used = resolve_pending(
                        main_ts, base_c, main_len - base_c, <tuple> ts_obj,
                        is_sdtla, k_param, sdtla_inclusive)
                    if weight_used:
                        win_wd += 1; total_wd += 1
                    else:
                        win_hd += 1; total_hd += 1
                    win_stale += n_branch; total_stale += n_branch
            if race_active and published > 0:
                pub_len = main_len - race_base
                ev = select_two_chains(is_sdtla, k_param, sdtla_inclusive,
                                       main_ts + race_base, pub_len,
                                       att_ts, published)
                if ev.weight_used:
                    win_wd += 1; total_wd += 1
                else:
                    win_hd += 1; total_hd += 1
                if ev.winner == 1:
                    win_stale += pub_len; total_stale += pub_len
                    win_stale -= stale_counted; total_stale -= stale_counted
                    main_len = race_base
                    for j in range(published):
                        main_ts[main_len] = att_ts[j]
                        main_miner[main_len] = 1
                        main_len += 1
                    hidden = a_private - a_published
                else:
                    stale_now = published - stale_counted
                    win_stale += stale_now; total_stale += stale_now
                    if a_private - a_published == 0:
                        hidden = 0
        else:
            if race_active and a_published > 0:
                stale_total_bl += a_published
                height_decisions_bl += 1

        selfish_wins = 0
        for j in range(main_len):
            if main_miner[j] == 1:
                selfish_wins += 1

        if is_defended:
            return RunResult(
                policy=policy, alpha=config.alpha, gamma=config.gamma,
                seed=config.seed, blocks=blocks,
                selfish_wins=selfish_wins, honest_wins=main_len - selfish_wins,
                ds_count=a_ds, sum_z=sum_z,
                sum_k=sum_k if is_sdtla else None,
                weight_decisions=total_wd, height_decisions=total_hd,
                fork_stale_blocks=total_stale, hidden_at_end=hidden,
                windows=trace,
            )
        return RunResult(
            policy=policy, alpha=config.alpha, gamma=config.gamma,
            seed=config.seed, blocks=blocks,
            selfish_wins=selfish_wins, honest_wins=main_len - selfish_wins,
            ds_count=a_ds, sum_z=sum_z, sum_k=None,
            weight_decisions=0, height_decisions=height_decisions_bl,
            fork_stale_blocks=stale_total_bl, hidden_at_end=hidden,
            windows=[],
        )
    finally:
        free(main_ts)
        free(main_miner)
        free(att_ts)
