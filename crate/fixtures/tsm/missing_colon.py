# expect: tsm 2 NEWLINE
if x
    y = 1
