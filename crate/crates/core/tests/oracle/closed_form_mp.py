# Arbitrary-precision evaluation of the closed-form transfer amplitudes and
# transmission used to freeze expected values in the Rust tests.
#
#   python3 closed_form_mp.py
import mpmath as mp

mp.mp.dps = 50


def amplitudes(wa, wb, al, be, ga, ka, j, gg, w):
    d = mp.mpc(j, gg)
    sg, sk = mp.sqrt(ga), mp.sqrt(ka)
    den = (1j * d + mp.sqrt(ka * ga)) ** 2 + (1j * al + 1j * ga + w - wa) * (
        1j * be + 1j * ka + w - wb
    )
    a = (d * sk + 1j * be * sg + sg * w - sg * wb) / den
    b = (d * sg + 1j * al * sk + sk * w - sk * wa) / den
    return a, b


def s21(wa, wb, al, be, ga, ka, j, gg, w):
    d = mp.mpc(j, gg)
    num = (
        2 * al * ka
        + 2 * be * ga
        - 4j * d * mp.sqrt(ka * ga)
        - 2j * ga * (w - wb)
        - 2j * ka * (w - wa)
    )
    den = (1j * d + mp.sqrt(ka * ga)) ** 2 + (1j * al + 1j * ga + w - wa) * (
        1j * be + 1j * ka + w - wb
    )
    return num / den


def show(label, z):
    print(f"{label}: re = {mp.nstr(z.real, 20)}, im = {mp.nstr(z.imag, 20)}")


f = mp.mpf
base = dict(wa=f("4.22"), wb=f("4.22"), al=f("0.001"), be=f("0.001"),
            ga=f("0.01"), ka=f("0.001"))

a, b = amplitudes(**base, j=f("0.05"), gg=0, w=f("4.22"))
show("baseline J=0.05 a", a)
show("baseline J=0.05 b", b)
show("baseline J=0.05 s21", s21(**base, j=f("0.05"), gg=0, w=f("4.22")))
show("baseline J=0 s21", s21(**base, j=0, gg=0, w=f("4.22")))
a, b = amplitudes(**base, j=0, gg=0, w=f("4.22"))
show("baseline J=0 a", a)
show("baseline J=0 b", b)
# composed route, J=0.05
a, b = amplitudes(**base, j=f("0.05"), gg=0, w=f("4.22"))
show("composed", -2j * mp.sqrt(base["ka"]) * b - 2j * mp.sqrt(base["ga"]) * a)
