# expect: tsm 4 INDENT
x = 1
    y = 2
