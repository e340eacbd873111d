# expect: ens
x = 1 + \
