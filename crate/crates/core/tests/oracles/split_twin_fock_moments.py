"""Independent oracle for the exact moments of a split twin-Fock state.

Splitting is done by expanding (c^dag)^n with c^dag = (a^dag - b^dag)/sqrt(2)
as a polynomial; spin operators act on explicit occupation dictionaries.
Nothing here shares code with the Rust implementation. Prints the values
frozen into tests/exact_moments.rs.
"""
import mpmath as mp

mp.mp.dps = 40


def split_mode(n):
    # polynomial in a^dag: coefficient list over power of a^dag (power of b^dag = n - k)
    poly = [mp.mpf(1)]
    h = 1 / mp.sqrt(2)
    for _ in range(n):
        nxt = [mp.mpf(0)] * (len(poly) + 1)
        for k, c in enumerate(poly):
            nxt[k + 1] += c * h      # a^dag term
            nxt[k] += c * (-h)       # -b^dag term
        poly = nxt
    norm = 1 / mp.sqrt(mp.factorial(n))
    return [poly[k] * mp.sqrt(mp.factorial(k) * mp.factorial(n - k)) * norm for k in range(n + 1)]


def split_twin_fock(n):
    g = split_mode(n)
    return {(kp, km, n - kp, n - km): g[kp] * g[km] for kp in range(n + 1) for km in range(n + 1)}


def ladder(psi, plus_mode, minus_mode, raise_):
    out = {}
    for occ, amp in psi.items():
        o = list(occ)
        if raise_:  # a_plus^dag a_minus
            if o[minus_mode] == 0:
                continue
            f = mp.sqrt((o[plus_mode] + 1) * o[minus_mode])
            o[plus_mode] += 1
            o[minus_mode] -= 1
        else:
            if o[plus_mode] == 0:
                continue
            f = mp.sqrt(o[plus_mode] * (o[minus_mode] + 1))
            o[plus_mode] -= 1
            o[minus_mode] += 1
        out[tuple(o)] = out.get(tuple(o), 0) + amp * f
    return out


def add(u, v, cu=1, cv=1):
    out = {}
    for k, a in u.items():
        out[k] = out.get(k, 0) + cu * a
    for k, a in v.items():
        out[k] = out.get(k, 0) + cv * a
    return out


def jx(psi, cloud):
    p, m = (0, 1) if cloud == 'a' else (2, 3)
    return add(ladder(psi, p, m, True), ladder(psi, p, m, False), mp.mpf(0.5), mp.mpf(0.5))


def jy(psi, cloud):
    p, m = (0, 1) if cloud == 'a' else (2, 3)
    return add(ladder(psi, p, m, True), ladder(psi, p, m, False), 1 / mp.mpc(0, 2), -1 / mp.mpc(0, 2))


def j_of(occ, cloud):
    return mp.mpf(occ[0] + occ[1]) / 2 if cloud == 'a' else mp.mpf(occ[2] + occ[3]) / 2


def scale_by_inverse_j(psi, cloud, extra=1):
    return {k: a / (j_of(k, cloud) * extra) for k, a in psi.items() if j_of(k, cloud) > 0}


def norm2(psi):
    return sum(abs(a) ** 2 for a in psi.values())


def moments(psi):
    pz = sum(abs(a) ** 2 * (mp.mpf(o[0] - o[1] + o[2] - o[3]) / 2) for o, a in psi.items())
    pz2 = sum(abs(a) ** 2 * (mp.mpf(o[0] - o[1] + o[2] - o[3]) / 2) ** 2 for o, a in psi.items())
    var = pz2 - pz ** 2
    ja2 = norm2(scale_by_inverse_j(jx(psi, 'a'), 'a')) + norm2(scale_by_inverse_j(jy(psi, 'a'), 'a'))
    jb2 = norm2(scale_by_inverse_j(jx(psi, 'b'), 'b')) + norm2(scale_by_inverse_j(jy(psi, 'b'), 'b'))
    Ja, Jb = mp.sqrt(ja2), mp.sqrt(jb2)
    perp = 0
    for op in (jx, jy):
        ua = scale_by_inverse_j(op(psi, 'a'), 'a', Ja)
        ub = scale_by_inverse_j(op(psi, 'b'), 'b', Jb)
        perp += norm2(add(ua, ub, 1, -1))
    lhs = (var + mp.mpf(0.5)) * perp
    rhs = (Ja ** 2 + Jb ** 2 - 1) ** 2 / (Ja * Jb)
    return var, Ja, Jb, perp, lhs, rhs


if __name__ == "__main__":
    for n in (2, 5, 50):
        var, Ja, Jb, perp, lhs, rhs = moments(split_twin_fock(n))
        print(f"N={2*n}: var_jz_plus={mp.nstr(var, 20)} j_norm_a={mp.nstr(Ja, 20)} "
              f"j_norm_b={mp.nstr(Jb, 20)} perp_sq_mean={mp.nstr(perp, 20)} "
              f"lhs={mp.nstr(lhs, 20)} rhs={mp.nstr(rhs, 20)}")
    # whole-ensemble transverse ratio of the unsplit twin-Fock, N = 10 (single cloud a)
    n = 5
    psi = {(n, n, 0, 0): mp.mpf(1)}
    r = (norm2(jx(psi, 'a')) + norm2(jy(psi, 'a'))) / (mp.mpf(n)) ** 2
    print("unsplit N=10 transverse ratio", mp.nstr(r, 20))
    # coherent spin states along +x in both clouds, 2 atoms each
    na = 2
    amp = [mp.sqrt(mp.binomial(na, k)) / mp.sqrt(2) ** na for k in range(na + 1)]
    psi = {(k, na - k, l, na - l): amp[k] * amp[l] for k in range(na + 1) for l in range(na + 1)}
    var, Ja, Jb, perp, lhs, rhs = moments(psi)
    print(f"coherent x product 2+2: var={mp.nstr(var,15)} J={mp.nstr(Ja,15)} perp={mp.nstr(perp,15)} lhs={mp.nstr(lhs,15)} rhs={mp.nstr(rhs,15)}")
