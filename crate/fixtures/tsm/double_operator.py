# expect: tsm 4 '*'
x = 1 * * 2
