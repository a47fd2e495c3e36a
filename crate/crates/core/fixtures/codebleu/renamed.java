public int sum(int[] xs) {
    int total = 0;
    for (int i = 0; i < xs.length; i++) {
        total += xs[i];
    }
    return total;
}
===
public int sum(int[] values) {
    int acc = 0;
    for (int k = 0; k < values.length; k++) {
        acc += values[k];
    }
    return acc;
}
---
public double mean(double[] xs) {
    double s = 0;
    for (double x : xs) {
        s += x;
    }
    return s / xs.length;
}
===
public double mean(double[] data) {
    double running = 0;
    for (double d : data) {
        running += d;
    }
    return running / data.length;
}
---
private static int gcd(int a, int b) {
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return Math.abs(a);
}
===
private static int gcd(int p, int q) {
    while (q != 0) {
        int r = p % q;
        p = q;
        q = r;
    }
    return Math.abs(p);
}
---
public void swap(int[] arr, int i, int j) {
    int tmp = arr[i];
    arr[i] = arr[j];
    arr[j] = tmp;
}
===
public void swap(int[] a, int left, int right) {
    int held = a[left];
    a[left] = a[right];
    a[right] = held;
}
---
public long factorial(int n) {
    if (n < 0) {
        throw new IllegalArgumentException("negative: " + n);
    }
    long result = 1L;
    while (n > 1) {
        result *= n--;
    }
    return result;
}
===
public long factorial(int m) {
    if (m < 0) {
        throw new IllegalArgumentException("negative: " + m);
    }
    long prod = 1L;
    while (m > 1) {
        prod *= m--;
    }
    return prod;
}
---
public int max(int a, int b) {
    if (a > b) {
        return a;
    }
    return b;
}
===
public int max(int first, int second) {
    if (first > second) {
        return first;
    }
    return second;
}
---
public Map<String, Integer> countWords(List<String> words) {
    Map<String, Integer> counts = new HashMap<>();
    for (String w : words) {
        counts.put(w, counts.getOrDefault(w, 0) + 1);
    }
    return counts;
}
===
public Map<String, Integer> countWords(List<String> tokens) {
    Map<String, Integer> freq = new HashMap<>();
    for (String tok : tokens) {
        freq.put(tok, freq.getOrDefault(tok, 0) + 1);
    }
    return freq;
}
---
public int hashCode() {
    int h = 17;
    h = 31 * h + x;
    h = 31 * h + y;
    return h;
}
===
public int hashCode() {
    int acc = 17;
    acc = 31 * acc + x;
    acc = 31 * acc + y;
    return acc;
}
---
public boolean isPrime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; d++) {
        if (n % d == 0) return false;
    }
    return true;
}
===
public boolean isPrime(int num) {
    if (num < 2) return false;
    for (int f = 2; f * f <= num; f++) {
        if (num % f == 0) return false;
    }
    return true;
}
---
public String readAll(Reader reader) throws IOException {
    char[] buf = new char[4096];
    StringBuilder out = new StringBuilder();
    int n;
    while ((n = reader.read(buf)) != -1) {
        out.append(buf, 0, n);
    }
    return out.toString();
}
===
public String readAll(Reader in) throws IOException {
    char[] chunk = new char[4096];
    StringBuilder text = new StringBuilder();
    int got;
    while ((got = in.read(chunk)) != -1) {
        text.append(chunk, 0, got);
    }
    return text.toString();
}
