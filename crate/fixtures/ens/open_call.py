# expect: ens
print(f(1),
