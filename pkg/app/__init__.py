# padyn: exact p-adic dynamics of f(x) = a x^2 / (b x + 1)
