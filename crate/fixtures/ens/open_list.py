# expect: ens
items = [1, 2,
      3
