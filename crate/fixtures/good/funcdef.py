def add(a, b):
    return a + b

def noop():
    pass

total = add(1, 2); print(total)
