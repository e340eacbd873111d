# expect: tsm 7 'if'
x = 1
y = x if
