# Regenerates the frozen reference values in tests/test_specfun.cpp.
# Requires mpmath; run once, paste the output.
import mpmath as mp

mp.mp.dps = 40


def jn_series(n, z):
    # direct power series, independent of mpmath's besselj
    s = mp.mpc(0)
    term = (z / 2) ** n / mp.factorial(n)
    k = 0
    while True:
        s += term
        k += 1
        term *= -(z / 2) ** 2 / (k * (n + k))
        if abs(term) < mp.mpf(10) ** (-45) * max(1, abs(s)) and k > 5:
            break
    return s + term


def show(tag, v):
    v = mp.mpc(v)
    print(f"{tag}: {mp.nstr(v.real, 20)} {mp.nstr(v.imag, 20)}")


show("J0(2) series", jn_series(0, mp.mpf(2)))
show("J0(2) mpmath", mp.besselj(0, 2))
show("H1_0(1)", mp.hankel1(0, 1))
show("j3(1.5)", mp.sqrt(mp.pi / 3) * mp.besselj(3.5, 1.5))
show("e^i/(4pi)", mp.exp(1j) / (4 * mp.pi))
show("(i/4)H1_0(1)", 0.25j * mp.hankel1(0, 1))

pts = [mp.mpc(0.3, 0), mp.mpc(5, 0.5), mp.mpc(11.5, 0.2), mp.mpc(15, 0), mp.mpc(40, 2), mp.mpc(90, 0.5)]
for n in [0, 1, 5, 20, 50, 120]:
    for z in pts:
        j = mp.besselj(n, z)
        h = mp.hankel1(n, z)
        print(f"{{{n}, {{{mp.nstr(z.real, 17)}, {mp.nstr(z.imag, 17)}}}, {{{mp.nstr(j.real, 17)}, {mp.nstr(j.imag, 17)}}}, {{{mp.nstr(h.real, 17)}, {mp.nstr(h.imag, 17)}}}}},")
for n in [0, 1, 4, 15]:
    for z in [mp.mpc(0.2, 0), mp.mpc(3, 0.3), mp.mpc(25, 1)]:
        j = mp.sqrt(mp.pi / (2 * z)) * mp.besselj(n + 0.5, z)
        h = mp.sqrt(mp.pi / (2 * z)) * mp.hankel1(n + 0.5, z)
        print(f"{{{n}, {{{mp.nstr(z.real, 17)}, {mp.nstr(z.imag, 17)}}}, {{{mp.nstr(j.real, 17)}, {mp.nstr(j.imag, 17)}}}, {{{mp.nstr(h.real, 17)}, {mp.nstr(h.imag, 17)}}}}},")
