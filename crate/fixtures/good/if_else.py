if x < 10:
    y = 1
elif x == 10:
    y = 2
else:
    y = 3
