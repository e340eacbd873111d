squares = [x * x for x in range(10) if x % 3]
table = {k: v for k, v in zip("abc", (1, 2, 3))}
gen = (i for i in squares)
flat = sum(map(lambda p: p[0] * p[1], table.items()), start=0)
name = f"value {flat!r:>10}"
with open("f") as fh, open("g") as gh:
    data = fh.read()[1:-1:2]
