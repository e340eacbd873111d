greeting = "hello" ' ' 'world'
items = [1, 2, (3), not True and False or None]
value = items[0].real
