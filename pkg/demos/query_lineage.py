"""
Lineage of a query over a probabilistic database
================================================

Each tuple is a Boolean variable; the lineage circuit is true on exactly
the subdatabases satisfying the query.  Compiling it gives the query's
probability under tuple independence.
"""

from twsdd.analysis import weighted_count
from twsdd.compile import compile_sdd
from twsdd.querylab import lineage, parse_database, parse_query
from twsdd.vtree import balanced_vtree

db = parse_database("""
rel R/1
rel S/2
rel T/1
t R 1 p=1/2
t R 2 p=1/2
t S 1 1 p=1/4
t S 1 2 p=3/4
t S 2 2 p=1/3
t T 2 p=2/3
""")
q = parse_query("q() :- R(x), S(x, y), T(y) | R(x), S(x, y), x != y")
print(q)

c = lineage(q, db)
print(c.to_text())

f = c.to_function()
form = compile_sdd(f, balanced_vtree(f.vars), c.names)
print("SDD size:", form.size)
print("query probability:", weighted_count(form, db.prob))
