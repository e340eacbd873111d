# expect: tsm 6 ENDMARKER
def f():
