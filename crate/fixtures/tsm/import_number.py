# expect: tsm 1 NUMBER
import 3
