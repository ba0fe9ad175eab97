"""
A polynomial SDD for indirect storage access
============================================

Builds the explicit SDD for the two smallest instances, checks it against
the function and prints the gate counts per vtree node class.
"""

import json

from twsdd.analysis import verify
from twsdd.isa import IsaParams, isa_function, isa_sdd, isa_size_audit

for k, m in [(1, 2), (2, 4)]:
    p = IsaParams(k, m)
    form = isa_sdd(p)
    # primes are kept as full terms, so several decisions share a false sub
    rep = verify(form, isa_function(p), distinct_subs=False)
    audit = isa_size_audit(form, p)
    print(f"ISA n={p.n}: size {form.size}, verified {rep.ok}, audit {audit['ok']}")
    print(json.dumps({"counts": audit["counts"], "max_prime_vars": audit["max_prime_vars"],
                      "bounds": audit["bounds"]}, indent=1, default=str))
