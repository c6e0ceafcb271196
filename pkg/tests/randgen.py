"""Random systems, formulas, automata and lassos for property tests."""

import itertools
import random

from explic import automata as au
from explic import boolexpr as bx
from explic import formula as F
from explic.system import make_system
from explic.trace import LassoTrace


def random_system(rng, max_states=4, max_props=3, max_actions=2, name="rand"):
    """Action-complete by construction: every action subset has at least one
    edge (with an exact cube guard) from every state."""
    n_act = rng.randint(1, max_actions)
    n_out = rng.randint(1, max_props - n_act) if max_props > n_act else 0
    acts = [f"a{i}" for i in range(1, n_act + 1)]
    outs = [f"p{i}" for i in range(1, n_out + 1)]
    states = [f"s{i}" for i in range(rng.randint(1, max_states))]
    edges = []
    for s in states:
        for bits in itertools.product((False, True), repeat=n_act):
            guard = bx.g_and(*[bx.var(a) if b else bx.g_not(bx.var(a)) for a, b in zip(acts, bits)])
            for _ in range(1 if rng.random() < 0.7 else 2):
                out = frozenset(o for o in outs if rng.random() < 0.5)
                edges.append((s, guard, out, rng.choice(states)))
    agents = [("u", _obs(rng, acts[0], acts + outs), [acts[0]])]
    if n_act > 1:
        agents.append(("v", _obs(rng, acts[1], acts + outs), [acts[1]]))
    return make_system(name, states, [states[0]], edges, acts + outs, acts, agents)


def _obs(rng, own, props):
    return {own} | {p for p in props if p != own and rng.random() < 0.4}


def random_ltl(rng, props, depth, past=True):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.08:
            return F.Const(rng.random() < 0.5)
        return F.Atom(rng.choice(props))
    unary = [F.Not, F.Next, F.Eventually, F.Globally] + ([F.Prev, F.Once, F.Historically] if past else [])
    binary = [F.And, F.Or, F.Until, F.Implies] + ([F.Since] if past else [])
    if rng.random() < 0.45:
        return rng.choice(unary)(random_ltl(rng, props, depth - 1, past))
    return rng.choice(binary)(random_ltl(rng, props, depth - 1, past), random_ltl(rng, props, depth - 1, past))


def random_kltl(rng, sys, depth):
    """KLTL formula of the given depth; K only over K-free arguments."""
    props = sorted(sys.atomic_props)
    agents = list(sys.agent_names)

    def go(d, allow_k):
        if d == 0 or rng.random() < 0.2:
            return F.Atom(rng.choice(props))
        r = rng.random()
        if allow_k and r < 0.3:
            return F.Know(rng.choice(agents), random_ltl(rng, props, max(0, d - 1)))
        if r < 0.6:
            return rng.choice([F.Not, F.Next, F.Eventually, F.Globally, F.Prev])(go(d - 1, allow_k))
        return rng.choice([F.And, F.Or, F.Until, F.Implies])(go(d - 1, allow_k), go(d - 1, allow_k))

    f = go(depth, True)
    if not any(isinstance(g, F.Know) for g in F.subformulas(f)):
        f = rng.choice([F.Globally, F.Eventually])(F.Know(rng.choice(agents), random_ltl(rng, props, 1)))
    return f


def random_ice(rng, sys):
    """G(trigger -> exists X. K_a(X ~>_A effect))."""
    props = sorted(sys.atomic_props)
    agent = rng.choice(list(sys.agent_names))
    acts = sorted(sys.actions)
    A = [a for a in acts if rng.random() < 0.6] or [rng.choice(acts)]
    trig = random_ltl(rng, props, 1)
    eff = random_ltl(rng, props, 1, past=rng.random() < 0.5)
    pred = F.CausalPred("X", tuple(A), eff)
    return F.Globally(F.Implies(trig, F.ExistsCause("X", F.Know(agent, pred))))


def random_lasso(rng, props, max_prefix=3, max_loop=3):
    props = sorted(props)

    def letter():
        return frozenset(p for p in props if rng.random() < 0.5)

    return LassoTrace(tuple(letter() for _ in range(rng.randint(0, max_prefix))),
                      tuple(letter() for _ in range(rng.randint(1, max_loop))))


def random_automaton(rng, props, max_states=4):
    n = rng.randint(1, max_states)

    def guard():
        g = au.TRUE
        for p in props:
            r = rng.random()
            if r < 0.3:
                g = g & au.bvar(p)
            elif r < 0.6:
                g = g & ~au.bvar(p)
        return g

    edges = []
    for _ in range(n):
        edges.append(au._merge_edges((guard(), rng.randrange(n)) for _ in range(rng.randint(1, 3))))
    acc = [s for s in range(n) if rng.random() < 0.4]
    return au.BuchiAutomaton(props, n, [0], edges, acc)


def rng_for(seed):
    return random.Random(seed)
