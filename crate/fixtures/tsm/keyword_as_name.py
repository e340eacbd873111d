# expect: tsm 1 '='
def = 3
