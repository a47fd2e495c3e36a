public int max(int a, int b) {
    if (a > b) {
        return a;
    }
    return b;
}
---
public boolean isEmpty(String s) {
    return s == null || s.length() == 0;
}
---
public int sum(int[] xs) {
    int total = 0;
    for (int i = 0; i < xs.length; i++) {
        total += xs[i];
    }
    return total;
}
---
public double mean(double[] xs) {
    double s = 0;
    for (double x : xs) {
        s += x;
    }
    return s / xs.length;
}
---
public static String reverse(String str) {
    if (str == null) {
        return null;
    }
    return new StringBuilder(str).reverse().toString();
}
---
public int indexOf(int[] array, int value, int start) {
    if (array == null) {
        return -1;
    }
    if (start < 0) {
        start = 0;
    }
    for (int i = start; i < array.length; i++) {
        if (value == array[i]) {
            return i;
        }
    }
    return -1;
}
---
public List<String> split(String text, char sep) {
    List<String> parts = new ArrayList<>();
    int begin = 0;
    for (int i = 0; i < text.length(); i++) {
        if (text.charAt(i) == sep) {
            parts.add(text.substring(begin, i));
            begin = i + 1;
        }
    }
    parts.add(text.substring(begin));
    return parts;
}
---
public Map<String, Integer> countWords(List<String> words) {
    Map<String, Integer> counts = new HashMap<>();
    for (String w : words) {
        counts.put(w, counts.getOrDefault(w, 0) + 1);
    }
    return counts;
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
---
public boolean isPrime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; d++) {
        if (n % d == 0) return false;
    }
    return true;
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
---
public String join(Iterable<?> items, String separator) {
    StringBuilder sb = new StringBuilder();
    boolean first = true;
    for (Object item : items) {
        if (!first) {
            sb.append(separator);
        }
        sb.append(item);
        first = false;
    }
    return sb.toString();
}
---
public double clamp(double value, double min, double max) {
    return value < min ? min : (value > max ? max : value);
}
---
@Override
public boolean equals(Object obj) {
    if (this == obj) {
        return true;
    }
    if (!(obj instanceof Point)) {
        return false;
    }
    Point other = (Point) obj;
    return x == other.x && y == other.y;
}
---
public int hashCode() {
    int h = 17;
    h = 31 * h + x;
    h = 31 * h + y;
    return h;
}
---
public void swap(int[] arr, int i, int j) {
    int tmp = arr[i];
    arr[i] = arr[j];
    arr[j] = tmp;
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
---
public Object get(int index) {
    try {
        return elements[index];
    } catch (ArrayIndexOutOfBoundsException e) {
        throw new NoSuchElementException("index " + index);
    }
}
---
public int compareTo(Version other) {
    int c = Integer.compare(major, other.major);
    if (c != 0) {
        return c;
    }
    c = Integer.compare(minor, other.minor);
    return c != 0 ? c : Integer.compare(patch, other.patch);
}
---
public static <T extends Comparable<T>> T maxOf(List<T> list) {
    T best = null;
    for (T item : list) {
        if (best == null || item.compareTo(best) > 0) {
            best = item;
        }
    }
    return best;
}
